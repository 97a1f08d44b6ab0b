#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cbpir/gf.hpp"

namespace cbpir {

class MatFqs;

// Dense row-major matrix over F_q. Entries are kept unpacked (one Fq word
// each) in memory; the serialized form bit-packs them at b bits per entry.
class MatFq {
  public:
    MatFq() = default;
    MatFq(TowerPtr tower, std::size_t rows, std::size_t cols); // zero-filled

    static MatFq identity(TowerPtr tower, std::size_t n);
    static MatFq random(TowerPtr tower, std::size_t rows, std::size_t cols, Rng& rng);
    // uniform over invertible n x n matrices, by rejection
    static MatFq random_invertible(TowerPtr tower, std::size_t n, Rng& rng);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const TowerPtr& tower() const { return tower_; }

    Fq at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    void set(std::size_t r, std::size_t c, Fq v) { data_[r * cols_ + c] = v; }
    std::span<const Fq> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<Fq> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    const std::vector<Fq>& data() const { return data_; }

    MatFq operator+(const MatFq& other) const;
    MatFq operator*(const MatFq& other) const;
    bool operator==(const MatFq& other) const;

    // this += c * other
    void add_scaled(Fq c, const MatFq& other);

    MatFq transpose() const;
    MatFq col_range(std::size_t c0, std::size_t width) const;

    // Removes rows [j*block_rows, (j+1)*block_rows) for every 0-based block
    // index j in blocks. May return a 0-row matrix.
    MatFq drop_row_blocks(std::span<const int> blocks, std::size_t block_rows) const;

    // Row rank by Gaussian elimination; q = 2 uses a bit-packed word path.
    // If ops is given it accumulates the modeled multiply-accumulate count:
    // (cols - pivot_col) per eliminated row, identical on both paths.
    int rank(std::uint64_t* ops = nullptr) const;

    std::optional<MatFq> try_inverse() const; // nullopt if singular
    MatFq inverse() const;                    // throws SingularMatrixError

    void serialize(Bytes& out) const;
    static MatFq parse(TowerPtr tower, ByteReader& in);

  private:
    TowerPtr tower_;
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Fq> data_;
};

// Dense row-major matrix over F_{q^s}. Each entry is s consecutive Fq words
// (power-basis coordinates), so flattening to F_q coordinates is a reshape.
class MatFqs {
  public:
    MatFqs() = default;
    MatFqs(TowerPtr tower, std::size_t rows, std::size_t cols); // zero-filled

    static MatFqs random(TowerPtr tower, std::size_t rows, std::size_t cols, Rng& rng);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const TowerPtr& tower() const { return tower_; }
    int s() const { return tower_->s(); }

    std::span<const Fq> at(std::size_t r, std::size_t c) const {
        return {data_.data() + (r * cols_ + c) * static_cast<std::size_t>(s()),
                static_cast<std::size_t>(s())};
    }
    std::span<Fq> at(std::size_t r, std::size_t c) {
        return {data_.data() + (r * cols_ + c) * static_cast<std::size_t>(s()),
                static_cast<std::size_t>(s())};
    }

    MatFqs operator+(const MatFqs& other) const;
    MatFqs operator*(const MatFqs& other) const;
    bool operator==(const MatFqs& other) const;

    MatFqs scaled(Fq c) const; // entry-wise c * a over F_q-scalar action
    MatFqs transpose() const;
    MatFqs row_range(std::size_t r0, std::size_t nrows) const;
    MatFqs select_cols(std::span<const int> idx) const;

    // F_q-flattening: rows x (cols*s) matrix whose row r concatenates the
    // coordinate vectors of row r's entries. Power basis = plain reshape.
    MatFq flatten_fq() const;
    MatFq flatten_fq(const BasisGamma& basis) const;

    std::optional<MatFqs> try_inverse() const;
    MatFqs inverse() const;

    void serialize(Bytes& out) const;
    static MatFqs parse(TowerPtr tower, ByteReader& in);

  private:
    TowerPtr tower_;
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Fq> data_; // rows * cols * s
};

// mixed product: F_q matrix times F_{q^s} matrix (F_q embeds in F_{q^s})
MatFqs operator*(const MatFq& a, const MatFqs& c);

// Kronecker product in the protocol's block-row layout: for w of length m,
// the result has m blocks of delta.rows() rows and block j equals w[j]*delta.
// distinct_scalars (optional) receives the number of distinct nonzero values
// of w — the number of scalar multiples of delta actually computed, at most
// min(wt(w), q-1) by pigeonholing.
MatFqs kron_blocks(std::span<const Fq> w, const MatFqs& delta,
                   std::size_t* distinct_scalars = nullptr);

} // namespace cbpir
