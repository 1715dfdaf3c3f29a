#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "redpanda/png_io.hpp"
#include "redpanda/rng.hpp"
#include "redpanda/tensor.hpp"

// Procedural multi-attribute image benchmark. Each sample carries a nuisance
// label (rendering style) and relevant labels (glyph geometry class plus
// secondary size/jitter attributes). The benchmark carves samples into
// train-normal / test-familiar / test-pseudo-anomaly / test-true-anomaly so
// that pseudo-anomalies are unseen (nuisance, class) combinations of normal
// classes while true anomalies are entirely held-out classes.

namespace redpanda::synthdata {

using numerics::Tensor;

struct AttributeSpec {
    std::size_t relevant_classes = 10;
    std::size_t sizes = 3;    // secondary relevant attribute: glyph scale bucket
    std::size_t jitters = 4;  // secondary relevant attribute: position bucket
    std::size_t nuisance_domains = 4;

    void validate() const {
        if (nuisance_domains < 2) throw std::invalid_argument("AttributeSpec: need at least 2 nuisance domains");
        if (relevant_classes < 4) throw std::invalid_argument("AttributeSpec: need at least 4 relevant classes");
        if (sizes < 1 || jitters < 1) throw std::invalid_argument("AttributeSpec: sizes/jitters must be >= 1");
    }
};

enum class Role { train_normal, test_familiar, test_pseudo, test_anomaly };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::train_normal: return "train_normal";
        case Role::test_familiar: return "test_familiar";
        case Role::test_pseudo: return "test_pseudo";
        case Role::test_anomaly: return "test_anomaly";
    }
    return "?";
}

inline Role role_from_string(const std::string& s) {
    if (s == "train_normal") return Role::train_normal;
    if (s == "test_familiar") return Role::test_familiar;
    if (s == "test_pseudo") return Role::test_pseudo;
    if (s == "test_anomaly") return Role::test_anomaly;
    throw std::runtime_error("unknown role '" + s + "'");
}

struct LabeledSample {
    Tensor<float> image;  // (H,W,3) in [0,1], quantized to the 8-bit grid
    int nuisance = 0;
    int relevant_class = 0;
    int aux1 = 0;
    int aux2 = 0;
    Role role = Role::train_normal;
    std::string id;
};

struct BenchmarkSpec {
    AttributeSpec attributes;
    std::size_t image_size = 64;
    std::size_t per_cell = 60;  // samples per (nuisance, class) cell
    std::vector<int> true_anomaly_classes = {8, 9};
    std::vector<std::pair<int, int>> pseudo_pairs = {{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    double train_fraction = 0.85;
    std::uint64_t seed = 7;

    void validate() const {
        attributes.validate();
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw std::invalid_argument("BenchmarkSpec: train_fraction must lie in (0,1)");
        if (image_size < 16 || image_size % 16 != 0)
            throw std::invalid_argument("BenchmarkSpec: image_size must be a multiple of 16");
        if (per_cell < 1) throw std::invalid_argument("BenchmarkSpec: per_cell must be >= 1");
        std::set<int> anom(true_anomaly_classes.begin(), true_anomaly_classes.end());
        for (int a : true_anomaly_classes)
            if (a < 0 || a >= static_cast<int>(attributes.relevant_classes))
                throw std::invalid_argument("BenchmarkSpec: anomaly class " + std::to_string(a) + " out of range");
        for (auto [n, a] : pseudo_pairs) {
            if (n < 0 || n >= static_cast<int>(attributes.nuisance_domains) || a < 0 ||
                a >= static_cast<int>(attributes.relevant_classes))
                throw std::invalid_argument("BenchmarkSpec: pseudo pair (" + std::to_string(n) + "," +
                                            std::to_string(a) + ") out of range");
            if (anom.count(a))
                throw std::invalid_argument("BenchmarkSpec: class " + std::to_string(a) +
                                            " is both a true-anomaly class and part of a pseudo pair");
        }
    }

    std::string serialize() const {
        std::ostringstream os;
        os << "domains=" << attributes.nuisance_domains << "\n";
        os << "classes=" << attributes.relevant_classes << "\n";
        os << "sizes=" << attributes.sizes << "\n";
        os << "jitters=" << attributes.jitters << "\n";
        os << "image_size=" << image_size << "\n";
        os << "per_cell=" << per_cell << "\n";
        os << "anomaly_classes=";
        for (std::size_t i = 0; i < true_anomaly_classes.size(); ++i)
            os << (i ? "," : "") << true_anomaly_classes[i];
        os << "\n";
        os << "pseudo_pairs=";
        for (std::size_t i = 0; i < pseudo_pairs.size(); ++i)
            os << (i ? "," : "") << pseudo_pairs[i].first << ":" << pseudo_pairs[i].second;
        os << "\n";
        os << "train_fraction=" << train_fraction << "\n";
        os << "seed=" << seed << "\n";
        return os.str();
    }

    static BenchmarkSpec parse(const std::string& text);
};

struct BenchmarkSplit {
    std::vector<LabeledSample> train_normal;
    std::vector<LabeledSample> test_familiar;
    std::vector<LabeledSample> test_pseudo;
    std::vector<LabeledSample> test_anomaly;
    std::size_t num_domains = 0;
    std::size_t num_classes = 0;
    std::size_t image_size = 0;

    std::size_t total() const {
        return train_normal.size() + test_familiar.size() + test_pseudo.size() + test_anomaly.size();
    }
    std::vector<const LabeledSample*> test_samples() const {
        std::vector<const LabeledSample*> out;
        out.reserve(test_familiar.size() + test_pseudo.size() + test_anomaly.size());
        for (const auto& s : test_familiar) out.push_back(&s);
        for (const auto& s : test_pseudo) out.push_back(&s);
        for (const auto& s : test_anomaly) out.push_back(&s);
        return out;
    }
};

namespace detail {

// Per-pixel noise as a pure hash of (seed, x, y, tag): parallel-safe and
// independent of evaluation order.
inline float pixel_noise(std::uint64_t seed, std::size_t x, std::size_t y, std::uint64_t tag) {
    const std::uint64_t h = splitmix64(seed ^ (x * 0x9E3779B97F4A7C15ULL) ^ (y * 0xC2B2AE3D27D4EB4FULL) ^ tag);
    return static_cast<float>(h >> 40) * 0x1.0p-24f * 2.0f - 1.0f;  // [-1, 1)
}

// Glyph geometry in a local frame with x,y in [-1,1]. The ten base shapes
// are visually distinct; classes beyond ten reuse geometry at shrunken scale.
inline bool glyph_mask(int cls, float x, float y) {
    const int base = ((cls % 10) + 10) % 10;
    const float shrink = 1.0f / (1.0f + 0.12f * static_cast<float>((cls / 10) % 4));
    x /= shrink;
    y /= shrink;
    const float ax = std::fabs(x), ay = std::fabs(y);
    switch (base) {
        case 0: return x * x + y * y <= 1.0f;
        case 1: return ax <= 0.82f && ay <= 0.82f;
        case 2: return y >= -0.8f && y <= 0.8f && ax <= (y + 0.8f) * 0.55f;
        case 3: return (ax <= 0.3f && ay <= 0.95f) || (ay <= 0.3f && ax <= 0.95f);
        case 4: {
            const float r = std::sqrt(x * x + y * y);
            return r >= 0.55f && r <= 1.0f;
        }
        case 5: return ax + ay <= 1.05f;
        case 6: return ax <= 0.9f && (std::fabs(y - 0.45f) <= 0.22f || std::fabs(y + 0.45f) <= 0.22f);
        case 7: return (std::fabs(x - y) <= 0.32f || std::fabs(x + y) <= 0.32f) && ax <= 0.95f && ay <= 0.95f;
        case 8:
            return (ay <= 0.9f && (std::fabs(x - 0.55f) <= 0.2f || std::fabs(x + 0.55f) <= 0.2f)) ||
                   (ay <= 0.2f && ax <= 0.55f);
        case 9:
            return ay <= 0.9f && (ax <= 0.16f || std::fabs(x - 0.62f) <= 0.16f || std::fabs(x + 0.62f) <= 0.16f);
    }
    return false;
}

struct Rgb {
    float r, g, b;
};

}  // namespace detail

// Deterministic rendering: the relevant class picks the glyph geometry, the
// nuisance domain picks the rendering style (background, palette, fill vs.
// outline, texture). Styles are chosen so the domain dominates raw pixel
// statistics, which is exactly the bias the benchmark is meant to exhibit.
inline Tensor<float> render_sample(const AttributeSpec& attrs, std::size_t image_size, int relevant_class, int aux1,
                                   int aux2, int nuisance, std::uint64_t seed) {
    attrs.validate();
    if (relevant_class < 0 || relevant_class >= static_cast<int>(attrs.relevant_classes))
        throw std::invalid_argument("render_sample: relevant class " + std::to_string(relevant_class) +
                                    " out of range [0," + std::to_string(attrs.relevant_classes) + ")");
    if (nuisance < 0 || nuisance >= static_cast<int>(attrs.nuisance_domains))
        throw std::invalid_argument("render_sample: nuisance label " + std::to_string(nuisance) + " out of range [0," +
                                    std::to_string(attrs.nuisance_domains) + ")");
    if (aux1 < 0 || aux1 >= static_cast<int>(attrs.sizes))
        throw std::invalid_argument("render_sample: aux1 (size) out of range");
    if (aux2 < 0 || aux2 >= static_cast<int>(attrs.jitters))
        throw std::invalid_argument("render_sample: aux2 (jitter) out of range");

    const std::size_t S = image_size;
    Rng rng(derive_seed(seed, 0xA11CE));
    const float scale = 0.42f + 0.11f * static_cast<float>(aux1);
    const float jx = ((aux2 % 2) ? 0.09f : -0.09f) + static_cast<float>(rng.uniform(-0.04, 0.04));
    const float jy = ((aux2 / 2 % 2) ? 0.09f : -0.09f) + static_cast<float>(rng.uniform(-0.04, 0.04));
    const int style = nuisance % 4;
    const float noise_amp = 0.02f + 0.01f * static_cast<float>(rng.uniform());

    std::vector<float> img(S * S * 3);
    for (std::size_t py = 0; py < S; ++py) {
        for (std::size_t px = 0; px < S; ++px) {
            const float u = (static_cast<float>(px) + 0.5f) / static_cast<float>(S) * 2.0f - 1.0f;
            const float v = (static_cast<float>(py) + 0.5f) / static_cast<float>(S) * 2.0f - 1.0f;
            const float gx = (u - jx) / scale;
            const float gy = (v - jy) / scale;
            const bool inside = detail::glyph_mask(relevant_class, gx, gy);
            const float r2 = gx * gx + gy * gy;
            const float n0 = detail::pixel_noise(seed, px, py, 0x11) * noise_amp;

            detail::Rgb c{};
            switch (style) {
                case 0: {  // photo-like: cool gradient background, shaded filled glyph
                    const float t = (v + 1.0f) * 0.5f;
                    c = {0.55f + 0.20f * t, 0.62f + 0.16f * t, 0.72f + 0.10f * t};
                    if (inside) {
                        const float shade = 0.25f * std::max(0.0f, 1.0f - r2);
                        c = {0.15f + shade, 0.20f + shade, 0.45f + shade};
                    }
                    break;
                }
                case 1: {  // sketch: white paper with grain, outlined glyph
                    const float grain = detail::pixel_noise(seed, px, py, 0x22) * 0.03f;
                    c = {0.95f + grain, 0.94f + grain, 0.92f + grain};
                    const bool inner = detail::glyph_mask(relevant_class, gx / 0.82f, gy / 0.82f);
                    if (inside && !inner) c = {0.08f, 0.08f, 0.10f};
                    break;
                }
                case 2: {  // sepia print: warm vignetted background, dark brown glyph
                    const float vignette = 1.0f - 0.18f * (u * u + v * v);
                    c = {0.84f * vignette, 0.75f * vignette, 0.58f * vignette};
                    if (inside) {
                        const float shade = 0.10f * std::max(0.0f, 1.0f - r2);
                        c = {0.33f + shade, 0.21f + shade, 0.11f + shade};
                    }
                    break;
                }
                default: {  // textured: diagonal stripes, dark matte glyph
                    const bool stripe = ((px + py) / 5) % 2 == 0;
                    c = stripe ? detail::Rgb{0.38f, 0.52f, 0.38f} : detail::Rgb{0.60f, 0.44f, 0.30f};
                    if (inside) c = {0.13f, 0.10f, 0.20f};
                    break;
                }
            }
            const std::size_t at = (py * S + px) * 3;
            img[at + 0] = c.r + n0;
            img[at + 1] = c.g + n0;
            img[at + 2] = c.b + detail::pixel_noise(seed, px, py, 0x33) * noise_amp;
        }
    }
    // Quantize to the 8-bit grid so PNG round-trips are exact.
    for (auto& val : img) {
        const float cl = std::min(1.0f, std::max(0.0f, val));
        val = static_cast<float>(std::lround(cl * 255.0f)) / 255.0f;
    }
    return Tensor<float>::from_data({S, S, 3}, std::move(img));
}

inline std::string make_sample_id(int nuisance, int relevant_class, std::size_t index) {
    std::ostringstream os;
    os << "n" << nuisance << "_c" << relevant_class << "_";
    os.fill('0');
    os.width(4);
    os << index;
    return os.str();
}

// Carves the full (domain x class x per_cell) grid into the four roles.
// True-anomaly classes go entirely to test_anomaly, pseudo pairs entirely to
// test_pseudo, everything else splits train_fraction / rest per cell.
inline BenchmarkSplit build_benchmark(const BenchmarkSpec& spec) {
    spec.validate();
    const auto& at = spec.attributes;
    std::set<int> anom(spec.true_anomaly_classes.begin(), spec.true_anomaly_classes.end());
    std::set<std::pair<int, int>> pseudo(spec.pseudo_pairs.begin(), spec.pseudo_pairs.end());

    for (int d = 0; d < static_cast<int>(at.nuisance_domains); ++d) {
        std::size_t usable = 0;
        for (int a = 0; a < static_cast<int>(at.relevant_classes); ++a)
            if (!anom.count(a) && !pseudo.count({d, a})) ++usable;
        if (usable == 0)
            throw std::invalid_argument("build_benchmark: domain " + std::to_string(d) +
                                        " has no training classes left");
    }

    BenchmarkSplit split;
    split.num_domains = at.nuisance_domains;
    split.num_classes = at.relevant_classes;
    split.image_size = spec.image_size;
    const std::size_t train_count =
        std::min<std::size_t>(spec.per_cell, static_cast<std::size_t>(std::lround(
                                                 spec.train_fraction * static_cast<double>(spec.per_cell))));

    for (int d = 0; d < static_cast<int>(at.nuisance_domains); ++d) {
        for (int a = 0; a < static_cast<int>(at.relevant_classes); ++a) {
            const bool is_anom = anom.count(a) != 0;
            const bool is_pseudo = !is_anom && pseudo.count({d, a}) != 0;

            // Which cell members train: decided by a per-cell substream.
            std::vector<char> to_train(spec.per_cell, 0);
            if (!is_anom && !is_pseudo) {
                Rng cell_rng(derive_seed(spec.seed, 0x5713, static_cast<std::uint64_t>(d),
                                         static_cast<std::uint64_t>(a)));
                auto picks = cell_rng.sample_without_replacement(spec.per_cell, train_count);
                for (std::size_t p : picks) to_train[p] = 1;
            }

            for (std::size_t i = 0; i < spec.per_cell; ++i) {
                LabeledSample s;
                s.nuisance = d;
                s.relevant_class = a;
                s.aux1 = static_cast<int>(i % at.sizes);
                s.aux2 = static_cast<int>((i / at.sizes) % at.jitters);
                s.id = make_sample_id(d, a, i);
                const std::uint64_t sample_seed =
                    derive_seed(spec.seed, 0x1D, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(a), i);
                s.image = render_sample(at, spec.image_size, a, s.aux1, s.aux2, d, sample_seed);
                if (is_anom) {
                    s.role = Role::test_anomaly;
                    split.test_anomaly.push_back(std::move(s));
                } else if (is_pseudo) {
                    s.role = Role::test_pseudo;
                    split.test_pseudo.push_back(std::move(s));
                } else if (to_train[i]) {
                    s.role = Role::train_normal;
                    split.train_normal.push_back(std::move(s));
                } else {
                    s.role = Role::test_familiar;
                    split.test_familiar.push_back(std::move(s));
                }
            }
        }
    }
    return split;
}

inline const std::vector<LabeledSample>& role_list(const BenchmarkSplit& s, Role r) {
    switch (r) {
        case Role::train_normal: return s.train_normal;
        case Role::test_familiar: return s.test_familiar;
        case Role::test_pseudo: return s.test_pseudo;
        case Role::test_anomaly: return s.test_anomaly;
    }
    throw std::logic_error("role_list: bad role");
}

// Manifest layout: <dir>/manifest.csv + <dir>/images/<id>.png.
inline void write_manifest(const BenchmarkSplit& split, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "images");
    std::ostringstream csv;
    csv << "filename,id,nuisance,class,aux1,aux2,role\n";
    for (Role r : {Role::train_normal, Role::test_familiar, Role::test_pseudo, Role::test_anomaly}) {
        for (const auto& s : role_list(split, r)) {
            const std::string rel = "images/" + s.id + ".png";
            imageio::write_png_file((fs::path(dir) / rel).string(), s.image);
            csv << rel << "," << s.id << "," << s.nuisance << "," << s.relevant_class << "," << s.aux1 << ","
                << s.aux2 << "," << role_name(s.role) << "\n";
        }
    }
    std::ofstream os(fs::path(dir) / "manifest.csv", std::ios::binary);
    if (!os) throw std::runtime_error("write_manifest: cannot write manifest.csv under '" + dir + "'");
    os << csv.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline BenchmarkSplit read_manifest(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path mpath = fs::path(dir) / "manifest.csv";
    std::ifstream is(mpath);
    if (!is) throw std::runtime_error("read_manifest: cannot open '" + mpath.string() + "'");
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_manifest: empty manifest");
    BenchmarkSplit split;
    std::size_t row = 1;
    int max_domain = -1, max_class = -1;
    std::size_t image_size = 0;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 7)
            throw std::runtime_error("read_manifest: row " + std::to_string(row) + " has " +
                                     std::to_string(f.size()) + " fields, expected 7");
        LabeledSample s;
        s.id = f[1];
        try {
            s.nuisance = std::stoi(f[2]);
            s.relevant_class = std::stoi(f[3]);
            s.aux1 = std::stoi(f[4]);
            s.aux2 = std::stoi(f[5]);
        } catch (const std::exception&) {
            throw std::runtime_error("read_manifest: row " + std::to_string(row) + " has non-numeric labels");
        }
        Role role;
        try {
            role = role_from_string(f[6]);
        } catch (const std::exception& e) {
            throw std::runtime_error("read_manifest: row " + std::to_string(row) + ": " + e.what());
        }
        s.role = role;
        const fs::path img = fs::path(dir) / f[0];
        if (!fs::exists(img))
            throw std::runtime_error("read_manifest: row " + std::to_string(row) + " (id " + s.id +
                                     ") references missing image '" + f[0] + "'");
        s.image = imageio::read_png_file(img.string());
        if (image_size == 0) image_size = s.image.dim(0);
        max_domain = std::max(max_domain, s.nuisance);
        max_class = std::max(max_class, s.relevant_class);
        switch (role) {
            case Role::train_normal: split.train_normal.push_back(std::move(s)); break;
            case Role::test_familiar: split.test_familiar.push_back(std::move(s)); break;
            case Role::test_pseudo: split.test_pseudo.push_back(std::move(s)); break;
            case Role::test_anomaly: split.test_anomaly.push_back(std::move(s)); break;
        }
    }
    split.num_domains = static_cast<std::size_t>(max_domain + 1);
    split.num_classes = static_cast<std::size_t>(max_class + 1);
    split.image_size = image_size;
    return split;
}

// Fingerprint of a dataset directory (FNV-1a of the manifest bytes). Every
// downstream artifact embeds it so stages can refuse mismatched inputs.
inline std::uint64_t manifest_hash(const std::string& dir) {
    const auto mpath = std::filesystem::path(dir) / "manifest.csv";
    std::ifstream is(mpath, std::ios::binary);
    if (!is) throw std::runtime_error("manifest_hash: cannot open '" + mpath.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return fnv1a64(bytes.data(), bytes.size());
}

inline BenchmarkSpec BenchmarkSpec::parse(const std::string& text) {
    BenchmarkSpec spec;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("BenchmarkSpec: bad line '" + line + "'");
        const std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        if (!val.empty() && val.back() == '\r') val.pop_back();
        try {
            if (key == "domains") spec.attributes.nuisance_domains = std::stoul(val);
            else if (key == "classes") spec.attributes.relevant_classes = std::stoul(val);
            else if (key == "sizes") spec.attributes.sizes = std::stoul(val);
            else if (key == "jitters") spec.attributes.jitters = std::stoul(val);
            else if (key == "image_size") spec.image_size = std::stoul(val);
            else if (key == "per_cell") spec.per_cell = std::stoul(val);
            else if (key == "train_fraction") spec.train_fraction = std::stod(val);
            else if (key == "seed") spec.seed = std::stoull(val);
            else if (key == "anomaly_classes") {
                spec.true_anomaly_classes.clear();
                std::istringstream vs(val);
                std::string tok;
                while (std::getline(vs, tok, ','))
                    if (!tok.empty()) spec.true_anomaly_classes.push_back(std::stoi(tok));
            } else if (key == "pseudo_pairs") {
                spec.pseudo_pairs.clear();
                std::istringstream vs(val);
                std::string tok;
                while (std::getline(vs, tok, ',')) {
                    if (tok.empty()) continue;
                    const auto colon = tok.find(':');
                    if (colon == std::string::npos)
                        throw std::runtime_error("expected nuisance:class, got '" + tok + "'");
                    spec.pseudo_pairs.emplace_back(std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1)));
                }
            } else {
                throw std::runtime_error("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("BenchmarkSpec: bad value for key '" + key + "'");
        }
    }
    return spec;
}

}  // namespace redpanda::synthdata
