#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "redpanda/adam.hpp"
#include "redpanda/augment.hpp"
#include "redpanda/checkpoint.hpp"
#include "redpanda/ops.hpp"
#include "redpanda/rng.hpp"
#include "redpanda/synthdata.hpp"
#include "redpanda/tensor.hpp"

// The training objective: an encoder mapping images to unit-norm codes, a
// nuisance-conditioned generator reconstructing the input from (code, label),
// a per-domain contrastive loss whose negatives never cross domains, an
// augmentation alignment term, and a perceptual reconstruction term.

namespace redpanda::model {

using numerics::Tensor;

enum class TrainMode { redpanda, simclr_global, raw_encoder };

inline TrainMode parse_mode(const std::string& s) {
    if (s == "redpanda") return TrainMode::redpanda;
    if (s == "simclr_global") return TrainMode::simclr_global;
    if (s == "raw_encoder") return TrainMode::raw_encoder;
    throw std::invalid_argument("unknown training mode '" + s + "' (expected redpanda, simclr_global or raw_encoder)");
}

inline const char* mode_name(TrainMode m) {
    switch (m) {
        case TrainMode::redpanda: return "redpanda";
        case TrainMode::simclr_global: return "simclr_global";
        case TrainMode::raw_encoder: return "raw_encoder";
    }
    return "?";
}

struct TrainingConfig {
    double tau = 0.1;
    double rec_weight = 0.3;
    double aug_weight = 1.0;
    std::size_t epochs = 200;
    std::size_t domains_per_batch = 4;
    std::size_t samples_per_domain = 32;
    double lr_encoder = 1e-4;
    double lr_generator = 3e-4;
    std::size_t embed_dim = 64;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::redpanda;
    bool two_view_aug = false;  // contrast two augmented views instead of augmented-vs-original
    std::size_t checkpoint_every = 0;  // epochs between checkpoints; 0 = final only
    augment::AugmentPolicy augment_policy;

    std::size_t batch_size() const { return domains_per_batch * samples_per_domain; }

    void validate() const {
        if (!(tau > 0)) throw std::invalid_argument("TrainingConfig: tau must be positive");
        if (rec_weight < 0 || aug_weight < 0) throw std::invalid_argument("TrainingConfig: loss weights must be >= 0");
        if (domains_per_batch < 1 || samples_per_domain < 1)
            throw std::invalid_argument("TrainingConfig: batch composition must be positive");
        if (embed_dim < 2) throw std::invalid_argument("TrainingConfig: embed_dim too small");
        augment_policy.validate();
    }
};

// ---------------------------------------------------------------------------
// layers

namespace detail {

template <typename T>
Tensor<T> he_normal(Rng& rng, numerics::Shape shape, std::size_t fan_in) {
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    std::vector<T> v(numerics::shape_numel(shape));
    for (auto& x : v) x = static_cast<T>(rng.normal() * std_dev);
    return Tensor<T>::from_data(std::move(shape), std::move(v), true);
}

}  // namespace detail

template <typename T>
struct Conv2dLayer {
    Tensor<T> w, b;
    std::size_t stride = 1;

    static Conv2dLayer make(Rng& rng, std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t stride) {
        Conv2dLayer layer;
        layer.w = detail::he_normal<T>(rng, {out_ch, in_ch, k, k}, in_ch * k * k);
        layer.b = Tensor<T>::zeros({out_ch}, true);
        layer.stride = stride;
        return layer;
    }

    Tensor<T> operator()(const Tensor<T>& x) const { return numerics::conv2d(x, w, b, stride); }
};

template <typename T>
struct LinearLayer {
    Tensor<T> w, b;

    static LinearLayer make(Rng& rng, std::size_t in_f, std::size_t out_f) {
        LinearLayer layer;
        layer.w = detail::he_normal<T>(rng, {in_f, out_f}, in_f);
        layer.b = Tensor<T>::zeros({out_f}, true);
        return layer;
    }

    Tensor<T> operator()(const Tensor<T>& x) const { return numerics::add_rowvec(numerics::matmul(x, w), b); }
};

using NamedParams = std::vector<std::pair<std::string, Tensor<float>>>;

template <typename T>
using NamedParamsT = std::vector<std::pair<std::string, Tensor<T>>>;

// ---------------------------------------------------------------------------
// encoder f: four stride-2 conv blocks (32, 64, 128, 256 channels, leaky
// relu) into a linear head, output l2-normalized rows of dimension d.

template <typename T>
class Encoder {
public:
    Encoder(std::size_t image_size, std::size_t embed_dim, std::uint64_t seed)
        : image_size_(image_size), embed_dim_(embed_dim) {
        if (image_size < 16 || image_size % 16 != 0)
            throw std::invalid_argument("Encoder: image size must be a multiple of 16");
        Rng rng(derive_seed(seed, 0xE0C0DE));
        const std::size_t chans[5] = {3, 32, 64, 128, 256};
        for (int i = 0; i < 4; ++i) conv_[i] = Conv2dLayer<T>::make(rng, chans[i], chans[i + 1], 3, 2);
        const std::size_t spatial = image_size / 16;
        head_ = LinearLayer<T>::make(rng, 256 * spatial * spatial, embed_dim);
    }

    // (B,3,H,W) in [0,1] -> (B,d) unit-norm codes.
    Tensor<T> forward(const Tensor<T>& images) const {
        if (images.ndim() != 4 || images.dim(1) != 3 || images.dim(2) != image_size_ || images.dim(3) != image_size_)
            throw std::invalid_argument("Encoder: expected (B,3," + std::to_string(image_size_) + "," +
                                        std::to_string(image_size_) + ") input, got " +
                                        numerics::shape_str(images.shape()));
        Tensor<T> h = images;
        for (int i = 0; i < 4; ++i) h = numerics::leaky_relu(conv_[i](h), T(0.2));
        const std::size_t feat = h.dim(1) * h.dim(2) * h.dim(3);
        h = numerics::reshape(h, {h.dim(0), feat});
        return numerics::l2_normalize(head_(h));
    }

    NamedParamsT<T> named_parameters() {
        NamedParamsT<T> out;
        for (int i = 0; i < 4; ++i) {
            out.push_back({"encoder.conv" + std::to_string(i + 1) + ".w", conv_[i].w});
            out.push_back({"encoder.conv" + std::to_string(i + 1) + ".b", conv_[i].b});
        }
        out.push_back({"encoder.head.w", head_.w});
        out.push_back({"encoder.head.b", head_.b});
        return out;
    }

    std::size_t image_size() const { return image_size_; }
    std::size_t embed_dim() const { return embed_dim_; }

private:
    std::size_t image_size_, embed_dim_;
    Conv2dLayer<T> conv_[4];
    LinearLayer<T> head_;
};

// ---------------------------------------------------------------------------
// generator G(code, nuisance): one-hot conditioning concatenated to the code,
// linear to a 4x4x256 seed map, then upsample+conv blocks up to (H,W,3) with
// a sigmoid head.

template <typename T>
class Generator {
public:
    Generator(std::size_t image_size, std::size_t embed_dim, std::size_t num_domains, std::uint64_t seed)
        : image_size_(image_size), embed_dim_(embed_dim), num_domains_(num_domains) {
        if (image_size < 16 || image_size % 16 != 0)
            throw std::invalid_argument("Generator: image size must be a multiple of 16");
        if (num_domains < 1) throw std::invalid_argument("Generator: need at least one nuisance domain");
        Rng rng(derive_seed(seed, 0x6E4E12));
        fc_ = LinearLayer<T>::make(rng, embed_dim + num_domains, 4 * 4 * 256);
        std::size_t res = 4, ch = 256;
        while (res < image_size) {
            const bool last = res * 2 == image_size;
            const std::size_t out_ch = last ? 3 : std::max<std::size_t>(16, ch / 2);
            blocks_.push_back(Conv2dLayer<T>::make(rng, ch, out_ch, 3, 1));
            ch = out_ch;
            res *= 2;
        }
    }

    Tensor<T> one_hot(const std::vector<int>& labels) const {
        std::vector<T> oh(labels.size() * num_domains_, T(0));
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] < 0 || labels[i] >= static_cast<int>(num_domains_))
                throw std::invalid_argument("Generator: nuisance label " + std::to_string(labels[i]) +
                                            " out of range [0," + std::to_string(num_domains_) + ")");
            oh[i * num_domains_ + static_cast<std::size_t>(labels[i])] = T(1);
        }
        return Tensor<T>::from_data({labels.size(), num_domains_}, std::move(oh));
    }

    // (B,d) codes + per-row nuisance labels -> (B,3,H,W) in [0,1].
    Tensor<T> forward(const Tensor<T>& codes, const std::vector<int>& labels) const {
        if (codes.ndim() != 2 || codes.dim(1) != embed_dim_)
            throw std::invalid_argument("Generator: expected (B," + std::to_string(embed_dim_) + ") codes, got " +
                                        numerics::shape_str(codes.shape()));
        if (labels.size() != codes.dim(0))
            throw std::invalid_argument("Generator: got " + std::to_string(labels.size()) + " labels for " +
                                        std::to_string(codes.dim(0)) + " codes");
        Tensor<T> h = numerics::leaky_relu(fc_(numerics::concat_cols(codes, one_hot(labels))), T(0.2));
        h = numerics::reshape(h, {codes.dim(0), 256, 4, 4});
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            h = blocks_[i](numerics::upsample2x(h));
            if (i + 1 < blocks_.size()) h = numerics::leaky_relu(h, T(0.2));
        }
        return numerics::sigmoid(h);
    }

    NamedParamsT<T> named_parameters() {
        NamedParamsT<T> out;
        out.push_back({"generator.fc.w", fc_.w});
        out.push_back({"generator.fc.b", fc_.b});
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            out.push_back({"generator.block" + std::to_string(i + 1) + ".w", blocks_[i].w});
            out.push_back({"generator.block" + std::to_string(i + 1) + ".b", blocks_[i].b});
        }
        return out;
    }

    std::size_t num_domains() const { return num_domains_; }

private:
    std::size_t image_size_, embed_dim_, num_domains_;
    LinearLayer<T> fc_;
    std::vector<Conv2dLayer<T>> blocks_;
};

// ---------------------------------------------------------------------------
// frozen random perceptual feature extractor (three stride-2 conv blocks).
// Never updated; feature distances through it define the reconstruction
// metric together with a small pixel term.

template <typename T>
class PerceptualNet {
public:
    explicit PerceptualNet(std::uint64_t seed) {
        Rng rng(derive_seed(seed, 0x9E2CE7));
        const std::size_t chans[4] = {3, 16, 32, 64};
        for (int i = 0; i < 3; ++i) {
            conv_[i] = Conv2dLayer<T>::make(rng, chans[i], chans[i + 1], 3, 2);
            conv_[i].w.set_requires_grad(false);
            conv_[i].b.set_requires_grad(false);
        }
    }

    std::vector<Tensor<T>> features(const Tensor<T>& images) const {
        std::vector<Tensor<T>> feats;
        Tensor<T> h = images;
        for (int i = 0; i < 3; ++i) {
            h = numerics::relu(conv_[i](h));
            feats.push_back(h);
        }
        return feats;
    }

private:
    Conv2dLayer<T> conv_[3];
};

// ---------------------------------------------------------------------------
// losses

template <typename T>
struct ContrastiveLoss {
    Tensor<T> loss;               // scalar, mean over anchors
    std::vector<T> per_anchor;    // anchor contributions in batch order
};

namespace detail {

// Normalized-temperature cross entropy over one candidate group. For anchor
// i within the group the positive is its augmented view; candidates are the
// positive plus every other group member's original code. Self-similarity is
// removed with an additive mask whose magnitude absorbs the similarity value
// exactly, so masked entries contribute exactly zero weight.
template <typename T>
Tensor<T> nt_xent_group(const Tensor<T>& codes, const Tensor<T>& aug_codes, const std::vector<std::size_t>& idx,
                        double tau, std::vector<T>* anchor_out) {
    const std::size_t m = idx.size();
    auto z = numerics::gather_rows(codes, idx);
    auto zp = numerics::gather_rows(aug_codes, idx);
    const T inv_tau = static_cast<T>(1.0 / tau);
    auto pos = numerics::scale(numerics::row_sum(numerics::mul(z, zp)), inv_tau);  // (m)
    auto sims = numerics::scale(numerics::matmul(z, numerics::transpose2d(z)), inv_tau);  // (m,m)
    std::vector<T> maskv(m * m, T(0));
    for (std::size_t i = 0; i < m; ++i) maskv[i * m + i] = T(-1e30);
    auto masked = numerics::add(sims, Tensor<T>::from_data({m, m}, std::move(maskv)));
    auto cands = numerics::concat_cols(masked, numerics::reshape(pos, {m, 1}));  // (m, m+1)
    auto anchor_losses = numerics::sub(numerics::logsumexp_rows(cands), pos);    // (m)
    if (anchor_out) *anchor_out = anchor_losses.data();
    return numerics::sum(anchor_losses);
}

}  // namespace detail

// Contrastive loss computed independently per nuisance domain: anchors only
// ever see candidates from their own domain, so codes outside an anchor's
// domain cannot influence its contribution.
template <typename T>
ContrastiveLoss<T> contrastive_per_domain_loss(const Tensor<T>& codes, const Tensor<T>& aug_codes,
                                               const std::vector<int>& nuisance, double tau) {
    if (codes.ndim() != 2 || codes.shape() != aug_codes.shape())
        throw std::invalid_argument("contrastive_per_domain_loss: codes and aug_codes must be row-aligned 2-d");
    const std::size_t b = codes.dim(0);
    if (b == 0 || nuisance.size() != b)
        throw std::invalid_argument("contrastive_per_domain_loss: empty batch or label count mismatch");

    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < b; ++i) groups[nuisance[i]].push_back(i);

    ContrastiveLoss<T> out;
    out.per_anchor.assign(b, T(0));
    Tensor<T> total;
    for (const auto& [domain, idx] : groups) {
        (void)domain;
        std::vector<T> anchors;
        auto group_sum = detail::nt_xent_group(codes, aug_codes, idx, tau, &anchors);
        for (std::size_t r = 0; r < idx.size(); ++r) out.per_anchor[idx[r]] = anchors[r];
        total = total.defined() ? numerics::add(total, group_sum) : group_sum;
    }
    out.loss = numerics::scale(total, static_cast<T>(1.0 / static_cast<double>(b)));
    return out;
}

// Single contrastive loss over the whole batch (the ablation): identical
// formula with every other batch sample as a negative.
template <typename T>
ContrastiveLoss<T> global_contrastive_loss(const Tensor<T>& codes, const Tensor<T>& aug_codes, double tau) {
    if (codes.ndim() != 2 || codes.shape() != aug_codes.shape())
        throw std::invalid_argument("global_contrastive_loss: codes and aug_codes must be row-aligned 2-d");
    const std::size_t b = codes.dim(0);
    if (b == 0) throw std::invalid_argument("global_contrastive_loss: empty batch");
    std::vector<std::size_t> idx(b);
    for (std::size_t i = 0; i < b; ++i) idx[i] = i;
    ContrastiveLoss<T> out;
    auto group_sum = detail::nt_xent_group(codes, aug_codes, idx, tau, &out.per_anchor);
    out.loss = numerics::scale(group_sum, static_cast<T>(1.0 / static_cast<double>(b)));
    return out;
}

// Mean over the batch of -cos(z_i, z_i+).
template <typename T>
Tensor<T> augmentation_loss(const Tensor<T>& codes, const Tensor<T>& aug_codes) {
    if (codes.ndim() != 2 || codes.shape() != aug_codes.shape())
        throw std::invalid_argument("augmentation_loss: codes and aug_codes must be row-aligned 2-d");
    return numerics::scale(numerics::mean(numerics::row_sum(numerics::mul(codes, aug_codes))), T(-1));
}

// Sum over perceptual layers of mean squared feature difference plus a 0.1
// pixel term (the pixel term makes the distance definite).
template <typename T>
Tensor<T> perceptual_loss(const PerceptualNet<T>& pnet, const Tensor<T>& x, const Tensor<T>& x_hat) {
    if (x.shape() != x_hat.shape())
        throw std::invalid_argument("perceptual_loss: shape mismatch " + numerics::shape_str(x.shape()) + " vs " +
                                    numerics::shape_str(x_hat.shape()));
    auto fx = pnet.features(x);
    auto fy = pnet.features(x_hat);
    Tensor<T> loss;
    for (std::size_t l = 0; l < fx.size(); ++l) {
        auto d = numerics::sub(fx[l], fy[l]);
        auto term = numerics::mean(numerics::mul(d, d));
        loss = loss.defined() ? numerics::add(loss, term) : term;
    }
    auto dp = numerics::sub(x, x_hat);
    return numerics::add(loss, numerics::scale(numerics::mean(numerics::mul(dp, dp)), T(0.1)));
}

// Mean over the batch of perceptual_loss(x_i, G(f(x_i), n_i)). Gradients
// reach both the generator (through x_hat) and the encoder (through codes).
template <typename T>
Tensor<T> reconstruction_loss(const Generator<T>& generator, const PerceptualNet<T>& pnet, const Tensor<T>& codes,
                              const std::vector<int>& nuisance, const Tensor<T>& images) {
    auto x_hat = generator.forward(codes, nuisance);
    return perceptual_loss(pnet, images, x_hat);
}

struct LossBreakdown {
    double contrastive = 0, augmentation = 0, reconstruction = 0, total = 0;
};

template <typename T>
struct TotalLoss {
    Tensor<T> total;
    LossBreakdown values;
};

// Mode-dependent combination. redpanda: L_con + aug_weight*L_aug +
// rec_weight*L_rec; simclr_global: global contrastive + aug term, no
// reconstruction; raw_encoder trains nothing and has no objective.
template <typename T>
TotalLoss<T> total_loss(const TrainingConfig& cfg, const Encoder<T>& encoder, const Generator<T>* generator,
                        const PerceptualNet<T>* pnet, const Tensor<T>& images, const Tensor<T>& aug_images,
                        const std::vector<int>& nuisance) {
    if (cfg.mode == TrainMode::raw_encoder)
        throw std::invalid_argument("total_loss: raw_encoder mode has no training objective");
    auto codes = encoder.forward(images);
    auto aug_codes = encoder.forward(aug_images);

    TotalLoss<T> out;
    Tensor<T> con = cfg.mode == TrainMode::redpanda
                        ? contrastive_per_domain_loss(codes, aug_codes, nuisance, cfg.tau).loss
                        : global_contrastive_loss(codes, aug_codes, cfg.tau).loss;
    out.values.contrastive = static_cast<double>(con.item());
    Tensor<T> total = con;

    auto laug = augmentation_loss(codes, aug_codes);
    out.values.augmentation = static_cast<double>(laug.item());
    total = numerics::add(total, numerics::scale(laug, static_cast<T>(cfg.aug_weight)));

    if (cfg.mode == TrainMode::redpanda && cfg.rec_weight > 0) {
        if (!generator || !pnet)
            throw std::invalid_argument("total_loss: redpanda mode with rec_weight > 0 needs generator and pnet");
        auto lrec = reconstruction_loss(*generator, *pnet, codes, nuisance, images);
        out.values.reconstruction = static_cast<double>(lrec.item());
        total = numerics::add(total, numerics::scale(lrec, static_cast<T>(cfg.rec_weight)));
    }
    out.total = total;
    out.values.total = static_cast<double>(total.item());
    return out;
}

// ---------------------------------------------------------------------------
// batching

// Draws domains_per_batch distinct domains, then samples_per_domain members
// per domain without replacement (with replacement plus a warning when a
// domain is smaller than requested). Returns indices into `train`.
inline std::vector<std::size_t> sample_batch(const std::vector<synthdata::LabeledSample>& train,
                                             const TrainingConfig& cfg, Rng& rng, std::ostream* warn = &std::cerr) {
    std::map<int, std::vector<std::size_t>> by_domain;
    for (std::size_t i = 0; i < train.size(); ++i) by_domain[train[i].nuisance].push_back(i);
    if (by_domain.size() < cfg.domains_per_batch)
        throw std::invalid_argument("sample_batch: train split has " + std::to_string(by_domain.size()) +
                                    " domains, need " + std::to_string(cfg.domains_per_batch));
    std::vector<int> domains;
    for (const auto& [d, _] : by_domain) domains.push_back(d);
    rng.shuffle(domains);
    domains.resize(cfg.domains_per_batch);

    std::vector<std::size_t> batch;
    batch.reserve(cfg.batch_size());
    for (int d : domains) {
        const auto& pool = by_domain[d];
        if (pool.size() >= cfg.samples_per_domain) {
            auto picks = rng.sample_without_replacement(pool.size(), cfg.samples_per_domain);
            for (std::size_t p : picks) batch.push_back(pool[p]);
        } else {
            if (warn)
                *warn << "[warn] domain " << d << " has " << pool.size() << " samples, sampling "
                      << cfg.samples_per_domain << " with replacement\n";
            for (std::size_t k = 0; k < cfg.samples_per_domain; ++k)
                batch.push_back(pool[rng.below(pool.size())]);
        }
    }
    return batch;
}

// (B images, HWC float) -> (B,3,H,W) tensor of T.
template <typename T>
Tensor<T> stack_images_nchw(const std::vector<const Tensor<float>*>& images) {
    if (images.empty()) throw std::invalid_argument("stack_images_nchw: empty batch");
    const std::size_t H = images[0]->dim(0), W = images[0]->dim(1), C = images[0]->dim(2);
    std::vector<T> out(images.size() * C * H * W);
    for (std::size_t b = 0; b < images.size(); ++b) {
        const auto& img = *images[b];
        if (img.shape() != images[0]->shape())
            throw std::invalid_argument("stack_images_nchw: inconsistent image shapes in batch");
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t c = 0; c < C; ++c)
                    out[((b * C + c) * H + y) * W + x] = static_cast<T>(img.data()[(y * W + x) * C + c]);
    }
    return Tensor<T>::from_data({images.size(), C, H, W}, std::move(out));
}

// Eval-mode encoding in fixed-size chunks; returns (N, d) float codes.
template <typename T>
std::vector<std::vector<float>> encode_images(const Encoder<T>& encoder,
                                              const std::vector<const Tensor<float>*>& images,
                                              std::size_t chunk = 128) {
    numerics::NoGradGuard no_grad;
    std::vector<std::vector<float>> codes;
    codes.reserve(images.size());
    for (std::size_t start = 0; start < images.size(); start += chunk) {
        const std::size_t stop = std::min(images.size(), start + chunk);
        std::vector<const Tensor<float>*> part(images.begin() + start, images.begin() + stop);
        auto out = encoder.forward(stack_images_nchw<T>(part));
        const std::size_t d = out.dim(1);
        for (std::size_t r = 0; r + start < stop; ++r) {
            std::vector<float> row(d);
            for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<float>(out.data()[r * d + j]);
            codes.push_back(std::move(row));
        }
    }
    return codes;
}

// ---------------------------------------------------------------------------
// training

struct EpochStats {
    std::size_t epoch = 0;
    double l_con = 0, l_aug = 0, l_rec = 0, total = 0;
};

template <typename T>
struct TrainResult {
    Encoder<T> encoder;
    std::optional<Generator<T>> generator;
    std::vector<EpochStats> curve;
};

template <typename T>
numerics::Checkpoint make_checkpoint(Encoder<T>& encoder, Generator<T>* generator, std::uint64_t config_hash,
                                     std::uint64_t seed) {
    numerics::Checkpoint ck;
    ck.config_hash = config_hash;
    ck.seed = seed;
    for (auto& [name, t] : encoder.named_parameters()) ck.records.push_back(numerics::to_record(name, t));
    if (generator)
        for (auto& [name, t] : generator->named_parameters()) ck.records.push_back(numerics::to_record(name, t));
    return ck;
}

template <typename T>
void load_encoder(const numerics::Checkpoint& ck, Encoder<T>& encoder) {
    for (auto& [name, t] : encoder.named_parameters()) numerics::load_record(ck.find(name), t);
}

// End-to-end training: separate Adam optimizers for encoder and generator,
// per-epoch loss means, optional checkpoint callback at the configured
// cadence. raw_encoder returns the seeded initialization untouched.
template <typename T>
TrainResult<T> train(const TrainingConfig& cfg, const synthdata::BenchmarkSplit& split,
                     const std::function<void(std::size_t, Encoder<T>&, Generator<T>*)>& checkpoint_sink = {},
                     std::ostream* log = nullptr) {
    cfg.validate();
    if (split.train_normal.empty()) throw std::invalid_argument("train: empty train split");
    const std::size_t image_size = split.train_normal[0].image.dim(0);

    TrainResult<T> result{Encoder<T>(image_size, cfg.embed_dim, derive_seed(cfg.seed, 1)), std::nullopt, {}};
    if (cfg.mode == TrainMode::raw_encoder) return result;

    const bool use_generator = cfg.mode == TrainMode::redpanda && cfg.rec_weight > 0;
    if (use_generator)
        result.generator.emplace(image_size, cfg.embed_dim, split.num_domains, derive_seed(cfg.seed, 2));
    PerceptualNet<T> pnet(derive_seed(cfg.seed, 3));

    std::vector<Tensor<T>> enc_params, gen_params;
    for (auto& [n, t] : result.encoder.named_parameters()) enc_params.push_back(t);
    numerics::Adam<T> enc_opt(enc_params, {.lr = cfg.lr_encoder});
    std::optional<numerics::Adam<T>> gen_opt;
    if (use_generator) {
        for (auto& [n, t] : result.generator->named_parameters()) gen_params.push_back(t);
        gen_opt.emplace(gen_params, numerics::AdamConfig{.lr = cfg.lr_generator});
    }

    Rng batch_rng(derive_seed(cfg.seed, 4));
    Rng aug_rng(derive_seed(cfg.seed, 5));
    const std::size_t steps_per_epoch = std::max<std::size_t>(1, split.train_normal.size() / cfg.batch_size());

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochStats stats{epoch, 0, 0, 0, 0};
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            auto idx = sample_batch(split.train_normal, cfg, batch_rng);
            std::vector<const Tensor<float>*> originals;
            std::vector<Tensor<float>> augmented;
            std::vector<int> labels;
            originals.reserve(idx.size());
            augmented.reserve(idx.size());
            for (std::size_t i : idx) {
                const auto& s = split.train_normal[i];
                labels.push_back(s.nuisance);
                const std::uint64_t aug_seed = aug_rng.next_u64();
                if (cfg.two_view_aug) {
                    augmented.push_back(augment::apply(cfg.augment_policy, s.image, derive_seed(aug_seed, 1)));
                    augmented.push_back(augment::apply(cfg.augment_policy, s.image, derive_seed(aug_seed, 2)));
                } else {
                    augmented.push_back(augment::apply(cfg.augment_policy, s.image, aug_seed));
                    originals.push_back(&s.image);
                }
            }
            Tensor<T> view1, view2;
            if (cfg.two_view_aug) {
                std::vector<const Tensor<float>*> v1, v2;
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    v1.push_back(&augmented[2 * i]);
                    v2.push_back(&augmented[2 * i + 1]);
                }
                view1 = stack_images_nchw<T>(v1);
                view2 = stack_images_nchw<T>(v2);
            } else {
                std::vector<const Tensor<float>*> v2;
                for (const auto& a : augmented) v2.push_back(&a);
                view1 = stack_images_nchw<T>(originals);
                view2 = stack_images_nchw<T>(v2);
            }

            auto loss = total_loss<T>(cfg, result.encoder, use_generator ? &*result.generator : nullptr,
                                      use_generator ? &pnet : nullptr, view1, view2, labels);
            const struct { const char* name; double v; } terms[] = {
                {"l_con", loss.values.contrastive},
                {"l_aug", loss.values.augmentation},
                {"l_rec", loss.values.reconstruction},
                {"total", loss.values.total},
            };
            for (const auto& t : terms)
                if (!std::isfinite(t.v))
                    throw std::runtime_error("train: " + std::string(t.name) + " is not finite at epoch " +
                                             std::to_string(epoch) + " step " + std::to_string(step));

            numerics::backward(loss.total);
            enc_opt.step();
            if (gen_opt) gen_opt->step();

            stats.l_con += loss.values.contrastive;
            stats.l_aug += loss.values.augmentation;
            stats.l_rec += loss.values.reconstruction;
            stats.total += loss.values.total;
        }
        stats.l_con /= static_cast<double>(steps_per_epoch);
        stats.l_aug /= static_cast<double>(steps_per_epoch);
        stats.l_rec /= static_cast<double>(steps_per_epoch);
        stats.total /= static_cast<double>(steps_per_epoch);
        result.curve.push_back(stats);
        if (log)
            *log << "epoch " << epoch << "/" << cfg.epochs << " l_con=" << stats.l_con << " l_aug=" << stats.l_aug
                 << " l_rec=" << stats.l_rec << " total=" << stats.total << "\n";
        if (checkpoint_sink && cfg.checkpoint_every && epoch % cfg.checkpoint_every == 0 && epoch != cfg.epochs)
            checkpoint_sink(epoch, result.encoder, use_generator ? &*result.generator : nullptr);
    }
    if (checkpoint_sink)
        checkpoint_sink(cfg.epochs, result.encoder, use_generator ? &*result.generator : nullptr);
    return result;
}

}  // namespace redpanda::model
