#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

// Approximate high-dimensional Gaussian filtering on the permutohedral
// lattice. filter() computes, for every input point i,
//     out_i = sum_j exp(-||f_i - f_j||^2 / 2) * in_j          (j includes i)
// where the features f are expected pre-scaled by their kernel stds.

namespace cuekit {

class PermutohedralLattice {
public:
    // features: n rows of d floats, row-major.
    PermutohedralLattice(std::span<const float> features, int d, int n) : d_(d), n_(n) {
        offset_.resize(static_cast<std::size_t>(n) * (d + 1));
        barycentric_.resize(static_cast<std::size_t>(n) * (d + 1));

        // diagonal of the elevation matrix E and its std correction
        std::vector<float> scale(d);
        const float inv_std_dev = std::sqrt(2.0f / 3.0f) * (d + 1);
        for (int i = 0; i < d; ++i)
            scale[i] = inv_std_dev / std::sqrt(static_cast<float>((i + 2) * (i + 1)));

        // canonical simplex vertex offsets, indexed by (remainder, rank)
        std::vector<int> canonical((d + 1) * (d + 1));
        for (int i = 0; i <= d; ++i) {
            for (int j = 0; j <= d - i; ++j) canonical[i * (d + 1) + j] = i;
            for (int j = d - i + 1; j <= d; ++j) canonical[i * (d + 1) + j] = i - (d + 1);
        }

        KeyTable table(d, static_cast<std::size_t>(n) * (d + 1));

        std::vector<float> elevated(d + 1), rem0(d + 1), bary(d + 2);
        std::vector<int> rank(d + 1), key(d);

        for (int p = 0; p < n; ++p) {
            const float* f = features.data() + static_cast<std::size_t>(p) * d;

            // elevate onto the hyperplane sum(x) = 0
            float sm = 0.0f;
            for (int j = d; j > 0; --j) {
                const float cf = f[j - 1] * scale[j - 1];
                elevated[j] = sm - j * cf;
                sm += cf;
            }
            elevated[0] = sm;

            // round to the nearest remainder-0 lattice point
            const float down = 1.0f / (d + 1);
            int sum = 0;
            for (int i = 0; i <= d; ++i) {
                const int h = static_cast<int>(std::lround(elevated[i] * down));
                rem0[i] = static_cast<float>(h * (d + 1));
                sum += h;
            }

            // rank of each coordinate's differential; identifies the simplex
            std::fill(rank.begin(), rank.end(), 0);
            for (int i = 0; i < d; ++i) {
                const double di = elevated[i] - rem0[i];
                for (int j = i + 1; j <= d; ++j) {
                    if (di < elevated[j] - rem0[j])
                        ++rank[i];
                    else
                        ++rank[j];
                }
            }

            // walk back onto the plane if the rounded point was off it
            for (int i = 0; i <= d; ++i) {
                rank[i] += sum;
                if (rank[i] < 0) {
                    rank[i] += d + 1;
                    rem0[i] += d + 1;
                } else if (rank[i] > d) {
                    rank[i] -= d + 1;
                    rem0[i] -= d + 1;
                }
            }

            // barycentric coordinates within the simplex
            std::fill(bary.begin(), bary.end(), 0.0f);
            for (int i = 0; i <= d; ++i) {
                const float v = (elevated[i] - rem0[i]) * down;
                bary[d - rank[i]] += v;
                bary[d - rank[i] + 1] -= v;
            }
            bary[0] += 1.0f + bary[d + 1];

            // register the d+1 simplex vertices
            for (int rem = 0; rem <= d; ++rem) {
                for (int i = 0; i < d; ++i)
                    key[i] = static_cast<int>(rem0[i]) + canonical[rem * (d + 1) + rank[i]];
                offset_[p * (d + 1) + rem] = table.find_or_insert(key.data());
                barycentric_[p * (d + 1) + rem] = bary[rem];
            }
        }

        m_ = table.size();

        // neighbor indices along each of the d+1 lattice axes
        blur_n1_.resize(static_cast<std::size_t>(d + 1) * m_);
        blur_n2_.resize(static_cast<std::size_t>(d + 1) * m_);
        std::vector<int> n1(d), n2(d);
        for (int axis = 0; axis <= d; ++axis) {
            for (int i = 0; i < m_; ++i) {
                const int* k = table.key(i);
                for (int c = 0; c < d; ++c) {
                    n1[c] = k[c] - 1;
                    n2[c] = k[c] + 1;
                }
                if (axis < d) {
                    n1[axis] = k[axis] + d;
                    n2[axis] = k[axis] - d;
                }
                blur_n1_[static_cast<std::size_t>(axis) * m_ + i] = table.find(n1.data());
                blur_n2_[static_cast<std::size_t>(axis) * m_ + i] = table.find(n2.data());
            }
        }
    }

    int points() const { return n_; }
    int lattice_size() const { return m_; }

    /// Filters value_size interleaved channels; in/out are n x value_size.
    void filter(std::span<const float> in, std::span<float> out, int value_size) const {
        const std::size_t vs = static_cast<std::size_t>(value_size);
        std::vector<float> a((m_ + 2) * vs, 0.0f);
        std::vector<float> b((m_ + 2) * vs, 0.0f);
        float* vals = a.data();
        float* next = b.data();

        // splat: distribute each point onto its simplex vertices (slot 0 stays
        // zero and absorbs out-of-lattice neighbor reads)
        for (int p = 0; p < n_; ++p)
            for (int r = 0; r <= d_; ++r) {
                const std::size_t o = (offset_[p * (d_ + 1) + r] + 1) * vs;
                const float w = barycentric_[p * (d_ + 1) + r];
                for (std::size_t c = 0; c < vs; ++c) vals[o + c] += w * in[p * vs + c];
            }

        // blur: [1/2, 1, 1/2] along each lattice axis
        for (int axis = 0; axis <= d_; ++axis) {
            for (int i = 0; i < m_; ++i) {
                const float* self = vals + (i + 1) * vs;
                const float* v1 = vals + (blur_n1_[static_cast<std::size_t>(axis) * m_ + i] + 1) * vs;
                const float* v2 = vals + (blur_n2_[static_cast<std::size_t>(axis) * m_ + i] + 1) * vs;
                float* dst = next + (i + 1) * vs;
                for (std::size_t c = 0; c < vs; ++c) dst[c] = self[c] + 0.5f * (v1[c] + v2[c]);
            }
            std::swap(vals, next);
        }

        // slice, with the overall gain correction for the blur chain
        const float alpha = 1.0f / (1.0f + std::pow(2.0f, -static_cast<float>(d_)));
        for (int p = 0; p < n_; ++p) {
            for (std::size_t c = 0; c < vs; ++c) out[p * vs + c] = 0.0f;
            for (int r = 0; r <= d_; ++r) {
                const std::size_t o = (offset_[p * (d_ + 1) + r] + 1) * vs;
                const float w = barycentric_[p * (d_ + 1) + r] * alpha;
                for (std::size_t c = 0; c < vs; ++c) out[p * vs + c] += w * vals[o + c];
            }
        }
    }

private:
    // open-addressing table mapping d-int lattice keys to dense indices
    class KeyTable {
    public:
        KeyTable(int d, std::size_t expected) : d_(d) {
            std::size_t cap = 16;
            while (cap < expected * 2) cap <<= 1;
            mask_ = cap - 1;
            slots_.assign(cap, -1);
            keys_.reserve(expected * d);
        }

        int find_or_insert(const int* key) {
            std::size_t h = hash(key) & mask_;
            while (true) {
                int& slot = slots_[h];
                if (slot < 0) {
                    slot = static_cast<int>(keys_.size() / d_);
                    keys_.insert(keys_.end(), key, key + d_);
                    return slot;
                }
                if (equals(slot, key)) return slot;
                h = (h + 1) & mask_;
            }
        }

        int find(const int* key) const {
            std::size_t h = hash(key) & mask_;
            while (true) {
                const int slot = slots_[h];
                if (slot < 0) return -1;
                if (equals(slot, key)) return slot;
                h = (h + 1) & mask_;
            }
        }

        int size() const { return static_cast<int>(keys_.size() / d_); }
        const int* key(int i) const { return keys_.data() + static_cast<std::size_t>(i) * d_; }

    private:
        std::uint64_t hash(const int* key) const {
            std::uint64_t h = 1469598103934665603ull;
            for (int i = 0; i < d_; ++i) {
                h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(key[i]));
                h *= 1099511628211ull;
            }
            return h;
        }
        bool equals(int slot, const int* key) const {
            return std::memcmp(keys_.data() + static_cast<std::size_t>(slot) * d_, key,
                               d_ * sizeof(int)) == 0;
        }

        int d_;
        std::size_t mask_;
        std::vector<int> slots_;
        std::vector<int> keys_;
    };

    int d_;
    int n_;
    int m_ = 0;
    std::vector<int> offset_;
    std::vector<float> barycentric_;
    std::vector<int> blur_n1_, blur_n2_;
};

} // namespace cuekit
