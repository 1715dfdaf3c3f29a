#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "redpanda/tensor.hpp"

// Self-contained PNG reader/writer for 8-bit images. The writer emits
// stored (uncompressed) deflate blocks; the reader implements the full
// inflate spec so externally produced PNGs load too.

namespace redpanda::imageio {

struct ImageU8 {
    std::size_t h = 0, w = 0, c = 0;
    std::vector<std::uint8_t> pixels;  // row-major, interleaved channels
};

namespace detail {

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t n, std::uint32_t crc = 0xFFFFFFFFu) {
    static const auto table = [] {
        std::vector<std::uint32_t> t(256);
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t v = i;
            for (int k = 0; k < 8; ++k) v = (v & 1) ? 0xEDB88320u ^ (v >> 1) : v >> 1;
            t[i] = v;
        }
        return t;
    }();
    for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc;
}

inline std::uint32_t adler32(const std::uint8_t* data, std::size_t n) {
    std::uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        a = (a + data[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

inline void put_u32be(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>(v & 0xFF));
}

inline void put_chunk(std::string& out, const char type[4], const std::string& payload) {
    put_u32be(out, static_cast<std::uint32_t>(payload.size()));
    std::string body(type, 4);
    body += payload;
    out += body;
    put_u32be(out, ~crc32(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

// zlib stream with stored deflate blocks only.
inline std::string zlib_store(const std::uint8_t* data, std::size_t n) {
    std::string out;
    out.push_back(0x78);
    out.push_back(0x01);
    std::size_t pos = 0;
    do {
        const std::size_t chunk = std::min<std::size_t>(n - pos, 65535);
        const bool final = pos + chunk >= n;
        out.push_back(final ? 1 : 0);
        out.push_back(static_cast<char>(chunk & 0xFF));
        out.push_back(static_cast<char>((chunk >> 8) & 0xFF));
        out.push_back(static_cast<char>(~chunk & 0xFF));
        out.push_back(static_cast<char>((~chunk >> 8) & 0xFF));
        out.append(reinterpret_cast<const char*>(data) + pos, chunk);
        pos += chunk;
    } while (pos < n);
    put_u32be(out, adler32(data, n));
    return out;
}

struct BitReader {
    const std::uint8_t* d;
    std::size_t n;
    std::size_t bytepos = 0;
    int bitpos = 0;

    int bit() {
        if (bytepos >= n) throw std::runtime_error("inflate: unexpected end of stream");
        const int b = (d[bytepos] >> bitpos) & 1;
        if (++bitpos == 8) {
            bitpos = 0;
            ++bytepos;
        }
        return b;
    }
    std::uint32_t bits(int k) {
        std::uint32_t v = 0;
        for (int i = 0; i < k; ++i) v |= static_cast<std::uint32_t>(bit()) << i;
        return v;
    }
    void align_byte() {
        if (bitpos) {
            bitpos = 0;
            ++bytepos;
        }
    }
    std::uint8_t byte() {
        if (bytepos >= n) throw std::runtime_error("inflate: unexpected end of stream");
        return d[bytepos++];
    }
};

// Canonical Huffman decoder over code lengths (puff-style).
struct Huffman {
    std::vector<int> counts;   // counts[len], len 0..15
    std::vector<int> symbols;  // symbols sorted by (length, symbol)

    void build(const std::vector<std::uint8_t>& lengths) {
        counts.assign(16, 0);
        for (auto l : lengths) counts[l]++;
        counts[0] = 0;
        int left = 1;
        for (int len = 1; len <= 15; ++len) {
            left = (left << 1) - counts[len];
            if (left < 0) throw std::runtime_error("inflate: over-subscribed Huffman code");
        }
        std::vector<int> offs(16, 0);
        for (int len = 1; len < 15; ++len) offs[len + 1] = offs[len] + counts[len];
        symbols.assign(lengths.size(), 0);
        for (std::size_t sym = 0; sym < lengths.size(); ++sym)
            if (lengths[sym]) symbols[offs[lengths[sym]]++] = static_cast<int>(sym);
    }

    int decode(BitReader& br) const {
        int code = 0, first = 0, index = 0;
        for (int len = 1; len <= 15; ++len) {
            code |= br.bit();
            const int count = counts[len];
            if (code - first < count) return symbols[index + (code - first)];
            index += count;
            first = (first + count) << 1;
            code <<= 1;
        }
        throw std::runtime_error("inflate: invalid Huffman code");
    }
};

inline void inflate_block_data(BitReader& br, const Huffman& litlen, const Huffman& dist,
                               std::vector<std::uint8_t>& out) {
    static const int len_base[29] = {3,  4,  5,  6,  7,  8,  9,  10, 11,  13,  15,  17,  19,  23, 27,
                                     31, 35, 43, 51, 59, 67, 83, 99, 115, 131, 163, 195, 227, 258};
    static const int len_extra[29] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2,
                                      2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 0};
    static const int dist_base[30] = {1,    2,    3,    4,    5,    7,     9,     13,    17,   25,
                                      33,   49,   65,   97,   129,  193,   257,   385,   513,  769,
                                      1025, 1537, 2049, 3073, 4097, 6145,  8193,  12289, 16385, 24577};
    static const int dist_extra[30] = {0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4,  4,  5,  5,  6,
                                       6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 11, 12, 12, 13, 13};
    for (;;) {
        const int sym = litlen.decode(br);
        if (sym < 256) {
            out.push_back(static_cast<std::uint8_t>(sym));
        } else if (sym == 256) {
            return;
        } else {
            const int li = sym - 257;
            if (li >= 29) throw std::runtime_error("inflate: bad length symbol");
            const std::size_t len = len_base[li] + br.bits(len_extra[li]);
            const int di = dist.decode(br);
            if (di >= 30) throw std::runtime_error("inflate: bad distance symbol");
            const std::size_t d = dist_base[di] + br.bits(dist_extra[di]);
            if (d > out.size()) throw std::runtime_error("inflate: distance exceeds output");
            for (std::size_t i = 0; i < len; ++i) out.push_back(out[out.size() - d]);
        }
    }
}

inline std::vector<std::uint8_t> inflate(const std::uint8_t* data, std::size_t n) {
    BitReader br{data, n};
    std::vector<std::uint8_t> out;
    bool final = false;
    while (!final) {
        final = br.bit() != 0;
        const std::uint32_t btype = br.bits(2);
        if (btype == 0) {
            br.align_byte();
            const std::size_t len = br.byte() | (static_cast<std::size_t>(br.byte()) << 8);
            const std::size_t nlen = br.byte() | (static_cast<std::size_t>(br.byte()) << 8);
            if ((len ^ nlen) != 0xFFFF) throw std::runtime_error("inflate: stored block length check failed");
            for (std::size_t i = 0; i < len; ++i) out.push_back(br.byte());
        } else if (btype == 1) {
            std::vector<std::uint8_t> ll(288);
            for (int i = 0; i < 144; ++i) ll[i] = 8;
            for (int i = 144; i < 256; ++i) ll[i] = 9;
            for (int i = 256; i < 280; ++i) ll[i] = 7;
            for (int i = 280; i < 288; ++i) ll[i] = 8;
            Huffman litlen, dist;
            litlen.build(ll);
            dist.build(std::vector<std::uint8_t>(30, 5));
            inflate_block_data(br, litlen, dist, out);
        } else if (btype == 2) {
            const std::size_t hlit = br.bits(5) + 257;
            const std::size_t hdist = br.bits(5) + 1;
            const std::size_t hclen = br.bits(4) + 4;
            static const int order[19] = {16, 17, 18, 0, 8, 7, 9, 6, 10, 5, 11, 4, 12, 3, 13, 2, 14, 1, 15};
            std::vector<std::uint8_t> clen(19, 0);
            for (std::size_t i = 0; i < hclen; ++i) clen[order[i]] = static_cast<std::uint8_t>(br.bits(3));
            Huffman cl;
            cl.build(clen);
            std::vector<std::uint8_t> lengths;
            lengths.reserve(hlit + hdist);
            while (lengths.size() < hlit + hdist) {
                const int sym = cl.decode(br);
                if (sym < 16) {
                    lengths.push_back(static_cast<std::uint8_t>(sym));
                } else if (sym == 16) {
                    if (lengths.empty()) throw std::runtime_error("inflate: repeat with no previous length");
                    const std::uint8_t prev = lengths.back();
                    for (std::uint32_t r = 3 + br.bits(2); r-- > 0;) lengths.push_back(prev);
                } else if (sym == 17) {
                    for (std::uint32_t r = 3 + br.bits(3); r-- > 0;) lengths.push_back(0);
                } else {
                    for (std::uint32_t r = 11 + br.bits(7); r-- > 0;) lengths.push_back(0);
                }
            }
            if (lengths.size() != hlit + hdist) throw std::runtime_error("inflate: code length overflow");
            Huffman litlen, dist;
            litlen.build({lengths.begin(), lengths.begin() + hlit});
            dist.build({lengths.begin() + hlit, lengths.end()});
            inflate_block_data(br, litlen, dist, out);
        } else {
            throw std::runtime_error("inflate: reserved block type");
        }
    }
    return out;
}

inline std::vector<std::uint8_t> zlib_decompress(const std::uint8_t* data, std::size_t n) {
    if (n < 6) throw std::runtime_error("zlib: stream too short");
    if ((data[0] & 0x0F) != 8) throw std::runtime_error("zlib: unsupported compression method");
    if (((static_cast<unsigned>(data[0]) << 8) | data[1]) % 31 != 0) throw std::runtime_error("zlib: bad header check");
    if (data[1] & 0x20) throw std::runtime_error("zlib: preset dictionary not supported");
    auto out = inflate(data + 2, n - 2 - 4);
    const std::uint8_t* tail = data + n - 4;
    const std::uint32_t expect = (static_cast<std::uint32_t>(tail[0]) << 24) | (tail[1] << 16) | (tail[2] << 8) | tail[3];
    if (adler32(out.data(), out.size()) != expect) throw std::runtime_error("zlib: adler32 mismatch");
    return out;
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    return pb <= pc ? b : c;
}

}  // namespace detail

inline std::string encode_png(const ImageU8& img) {
    if (img.c != 3) throw std::invalid_argument("encode_png: only 3-channel RGB images are written");
    if (img.pixels.size() != img.h * img.w * img.c) throw std::invalid_argument("encode_png: pixel buffer size mismatch");
    const std::size_t rowbytes = img.w * img.c;
    std::vector<std::uint8_t> raw((rowbytes + 1) * img.h);
    for (std::size_t y = 0; y < img.h; ++y) {
        raw[y * (rowbytes + 1)] = 0;  // filter: none
        std::memcpy(raw.data() + y * (rowbytes + 1) + 1, img.pixels.data() + y * rowbytes, rowbytes);
    }
    std::string out("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    detail::put_u32be(ihdr, static_cast<std::uint32_t>(img.w));
    detail::put_u32be(ihdr, static_cast<std::uint32_t>(img.h));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // color type: truecolor
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // no interlace
    detail::put_chunk(out, "IHDR", ihdr);
    detail::put_chunk(out, "IDAT", detail::zlib_store(raw.data(), raw.size()));
    detail::put_chunk(out, "IEND", "");
    return out;
}

inline ImageU8 decode_png(const std::string& bytes) {
    const auto* d = reinterpret_cast<const std::uint8_t*>(bytes.data());
    const std::size_t n = bytes.size();
    if (n < 8 + 12 || std::memcmp(d, "\x89PNG\r\n\x1a\n", 8) != 0)
        throw std::runtime_error("decode_png: not a PNG file");
    std::size_t pos = 8;
    std::size_t w = 0, h = 0;
    int color_type = -1;
    std::vector<std::uint8_t> idat;
    auto u32be = [&](std::size_t at) {
        return (static_cast<std::uint32_t>(d[at]) << 24) | (d[at + 1] << 16) | (d[at + 2] << 8) | d[at + 3];
    };
    bool saw_end = false;
    while (pos + 12 <= n && !saw_end) {
        const std::uint32_t len = u32be(pos);
        if (pos + 12 + len > n) throw std::runtime_error("decode_png: truncated chunk");
        const char* type = bytes.data() + pos + 4;
        const std::uint8_t* payload = d + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("decode_png: bad IHDR");
            w = u32be(pos + 8);
            h = u32be(pos + 12);
            const int depth = payload[8];
            color_type = payload[9];
            if (depth != 8) throw std::runtime_error("decode_png: only 8-bit depth supported");
            if (payload[12] != 0) throw std::runtime_error("decode_png: interlaced PNGs not supported");
            if (color_type != 0 && color_type != 2 && color_type != 4 && color_type != 6)
                throw std::runtime_error("decode_png: palette color type not supported");
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_end = true;
        }
        pos += 12 + len;
    }
    if (w == 0 || h == 0 || idat.empty()) throw std::runtime_error("decode_png: missing image data");
    const std::size_t channels = color_type == 0 ? 1 : color_type == 2 ? 3 : color_type == 4 ? 2 : 4;
    auto raw = detail::zlib_decompress(idat.data(), idat.size());
    const std::size_t rowbytes = w * channels;
    if (raw.size() != (rowbytes + 1) * h) throw std::runtime_error("decode_png: decompressed size mismatch");

    // Undo per-row filters in place (on a copy without filter bytes).
    std::vector<std::uint8_t> img(rowbytes * h);
    const std::size_t bpp = channels;
    for (std::size_t y = 0; y < h; ++y) {
        const std::uint8_t filter = raw[y * (rowbytes + 1)];
        const std::uint8_t* src = raw.data() + y * (rowbytes + 1) + 1;
        std::uint8_t* cur = img.data() + y * rowbytes;
        const std::uint8_t* up = y ? img.data() + (y - 1) * rowbytes : nullptr;
        for (std::size_t x = 0; x < rowbytes; ++x) {
            const int a = x >= bpp ? cur[x - bpp] : 0;
            const int b = up ? up[x] : 0;
            const int c = (up && x >= bpp) ? up[x - bpp] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += detail::paeth(a, b, c); break;
                default: throw std::runtime_error("decode_png: unknown filter type");
            }
            cur[x] = static_cast<std::uint8_t>(v & 0xFF);
        }
    }

    // Normalize to 3-channel RGB.
    ImageU8 out;
    out.h = h;
    out.w = w;
    out.c = 3;
    out.pixels.resize(h * w * 3);
    for (std::size_t i = 0; i < h * w; ++i) {
        const std::uint8_t* px = img.data() + i * channels;
        std::uint8_t r, g, b;
        if (channels == 1) r = g = b = px[0];
        else if (channels == 2) r = g = b = px[0];
        else { r = px[0]; g = px[1]; b = px[2]; }
        out.pixels[i * 3 + 0] = r;
        out.pixels[i * 3 + 1] = g;
        out.pixels[i * 3 + 2] = b;
    }
    return out;
}

// Float (H,W,3) tensor in [0,1] <-> 8-bit image. Rendering quantizes to the
// 8-bit grid before saving, so write/read round-trips exactly.
inline ImageU8 tensor_to_rgb8(const numerics::Tensor<float>& t) {
    if (t.ndim() != 3 || t.dim(2) != 3)
        throw std::invalid_argument("tensor_to_rgb8: expected (H,W,3), got " + numerics::shape_str(t.shape()));
    ImageU8 img;
    img.h = t.dim(0);
    img.w = t.dim(1);
    img.c = 3;
    img.pixels.resize(t.numel());
    for (std::size_t i = 0; i < t.numel(); ++i) {
        const float v = std::min(1.0f, std::max(0.0f, t.data()[i]));
        img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return img;
}

inline numerics::Tensor<float> rgb8_to_tensor(const ImageU8& img) {
    std::vector<float> data(img.pixels.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(img.pixels[i]) / 255.0f;
    return numerics::Tensor<float>::from_data({img.h, img.w, img.c}, std::move(data));
}

inline void write_png_file(const std::string& path, const numerics::Tensor<float>& hwc) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_png_file: cannot open '" + path + "'");
    const std::string bytes = encode_png(tensor_to_rgb8(hwc));
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("write_png_file: write failed for '" + path + "'");
}

inline numerics::Tensor<float> read_png_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_png_file: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return rgb8_to_tensor(decode_png(bytes));
}

}  // namespace redpanda::imageio
