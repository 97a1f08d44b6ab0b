#pragma once

#include "cbpir/matfq.hpp"

namespace cbpir {

// A random [n, k] linear code over F_{q^s} with a designated information set
// I. Decoding is always information-set erasure decoding: the protocol
// guarantees error supports lie in the complement of I, so a k x k solve
// (precomputed as info_inverse) replaces generic decoding.
class LinearCode {
  public:
    // I uniform among k-subsets of [n] (stored ascending); G restricted to I
    // uniform among invertible k x k matrices; remaining columns uniform.
    static LinearCode sample(TowerPtr tower, int n, int k, Rng& rng);

    int n() const { return static_cast<int>(gen_.cols()); }
    int k() const { return static_cast<int>(gen_.rows()); }
    const TowerPtr& tower() const { return gen_.tower(); }
    const MatFqs& generator() const { return gen_; }
    const std::vector<int>& info_set() const { return info_; }
    const std::vector<int>& complement() const { return comp_; }
    const MatFqs& info_inverse() const { return info_inv_; }

    // each row of messages (r x k) maps to a codeword row (r x n)
    MatFqs encode_rows(const MatFqs& messages) const;

    struct Decomposition {
        MatFqs codewords; // r x n, rows in C
        MatFqs errors;    // r x n, codewords + errors = received
    };
    // Valid on rows of the form c + e with supp(e) in the complement of I;
    // violations surface as an error part touching I (see errors_supported).
    Decomposition erasure_decode_rows(const MatFqs& received) const;

    // phi: places the columns of e0 (r x (n-k)) at the complement positions
    // of I, ascending, zero elsewhere
    MatFqs phi_complement(const MatFqs& e0) const;

    // true iff the error part vanishes on every information-set column
    bool errors_supported(const MatFqs& errors) const;

    void serialize(Bytes& out) const;
    static LinearCode parse(ByteReader& in);

  private:
    LinearCode(MatFqs gen, std::vector<int> info);

    MatFqs gen_; // k x n
    std::vector<int> info_;
    std::vector<int> comp_;
    MatFqs info_inv_; // (G restricted to I)^|-1
};

} // namespace cbpir
