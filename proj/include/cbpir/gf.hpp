#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cbpir/errors.hpp"
#include "cbpir/rng.hpp"
#include "cbpir/serial.hpp"

namespace cbpir {

// An element of F_q, q = 2^b: the bits are the coefficients of a binary
// polynomial of degree < b. Always holds value < q.
using Fq = std::uint32_t;

class FieldTower;
using TowerPtr = std::shared_ptr<const FieldTower>;

// The tower F_2 <= F_q <= F_{q^s} with q = 2^b. F_q is F_2[x]/(base_modulus)
// and F_{q^s} is F_q[y]/(ext_modulus). Elements of F_{q^s} are handled as
// coordinate spans of length s over the power basis {1, y, ..., y^{s-1}}.
//
// Immutable after construction; all operations are pure and thread-safe.
class FieldTower {
  public:
    static constexpr int kMaxB = 31;
    static constexpr int kMaxS = 255;

    // Finds irreducible moduli by seeded random search (deterministic per
    // seed). Throws CapExceeded if the search cap is hit.
    FieldTower(int b, int s, std::uint64_t seed);

    // Explicit moduli; both are verified irreducible.
    FieldTower(int b, std::uint64_t base_modulus, int s, std::vector<Fq> ext_modulus);

    int b() const { return b_; }
    int s() const { return s_; }
    std::uint32_t q() const { return 1u << b_; }

    // degree-b polynomial over F_2, bit i = coefficient of x^i, bit b set
    std::uint64_t base_modulus() const { return base_mod_; }
    // monic degree-s polynomial over F_q, index i = coefficient of y^i
    const std::vector<Fq>& ext_modulus() const { return ext_mod_; }

    bool same_as(const FieldTower& other) const {
        return b_ == other.b_ && s_ == other.s_ && base_mod_ == other.base_mod_ &&
               ext_mod_ == other.ext_mod_;
    }

    // ---- F_q ----
    Fq fq_add(Fq a, Fq c) const { return a ^ c; }
    Fq fq_mul(Fq a, Fq c) const {
        if (!mul_tab_.empty())
            return mul_tab_[(static_cast<std::size_t>(a) << b_) | c];
        return fq_mul_generic(a, c);
    }
    Fq fq_inv(Fq a) const; // throws Error on zero

    // ---- F_{q^s}; spans have length s ----
    void fqs_add(std::span<const Fq> a, std::span<const Fq> c, std::span<Fq> out) const;
    void fqs_mul(std::span<const Fq> a, std::span<const Fq> c, std::span<Fq> out) const;
    // acc ^= a * c
    void fqs_mul_acc(std::span<const Fq> a, std::span<const Fq> c, std::span<Fq> acc) const;
    void fqs_inv(std::span<const Fq> a, std::span<Fq> out) const; // throws Error on zero
    // out = scalar * a (coordinate-wise, scalar in F_q)
    void fqs_scale(Fq scalar, std::span<const Fq> a, std::span<Fq> out) const;
    void fqs_scale_acc(Fq scalar, std::span<const Fq> a, std::span<Fq> acc) const;
    static bool is_zero(std::span<const Fq> a);
    void fqs_one(std::span<Fq> out) const;
    void fqs_random(Rng& rng, std::span<Fq> out) const;

    void serialize(Bytes& out) const;
    static FieldTower parse(ByteReader& in);

  private:
    Fq fq_mul_generic(Fq a, Fq c) const;
    void validate_and_init();
    void build_tables();

    int b_ = 0;
    int s_ = 0;
    std::uint64_t base_mod_ = 0;
    std::vector<Fq> ext_mod_;
    std::vector<std::uint8_t> mul_tab_; // q*q, built for b <= 8
    std::vector<std::uint8_t> inv_tab_;
};

TowerPtr make_tower(int b, int s, std::uint64_t seed);

// A basis Gamma = {gamma_1,...,gamma_s} of F_{q^s} over F_q together with the
// split index v defining V = <gamma_1..gamma_v> and W = <gamma_{v+1}..gamma_s>.
// Stored as the invertible change-of-basis matrix taking power-basis
// coordinates to Gamma-coordinates (and its inverse), so the projections
// psi_V / psi_W are coordinate masks in the Gamma chart.
class BasisGamma {
  public:
    static BasisGamma sample(TowerPtr tower, int v, Rng& rng);
    static BasisGamma identity(TowerPtr tower, int v);

    int v() const { return v_; }
    int s() const { return tower_->s(); }
    const TowerPtr& tower() const { return tower_; }
    // row-major s x s over F_q, power coords -> Gamma coords
    const std::vector<Fq>& change_of_basis() const { return to_gamma_; }

    void to_coords(std::span<const Fq> power, std::span<Fq> gamma) const;
    void from_coords(std::span<const Fq> gamma, std::span<Fq> power) const;

    // psi_V, psi_W in power coordinates; project_v(x) + project_w(x) = x
    void project_v(std::span<const Fq> x, std::span<Fq> out) const;
    void project_w(std::span<const Fq> x, std::span<Fq> out) const;

    // Gamma-coordinates v+1..s of x (length s-v); F_q-linear in x
    void w_coords(std::span<const Fq> x, std::span<Fq> out) const;

    // build elements from partial Gamma coordinates
    void from_v_coords(std::span<const Fq> vc, std::span<Fq> power) const;
    void from_w_coords(std::span<const Fq> wc, std::span<Fq> power) const;

    // gamma_i (1-based) in power coordinates
    std::vector<Fq> gamma_element(int i) const;

    void random_in_v(Rng& rng, std::span<Fq> power) const;
    void random_in_w(Rng& rng, std::span<Fq> power) const;

  private:
    BasisGamma(TowerPtr tower, int v, std::vector<Fq> to_gamma, std::vector<Fq> from_gamma);

    TowerPtr tower_;
    int v_;
    std::vector<Fq> to_gamma_;   // s x s row-major
    std::vector<Fq> from_gamma_; // inverse
};

// Gaussian inversion of a small row-major n x n matrix over F_q.
// Returns false if singular. Shared by BasisGamma and the tower search.
bool invert_small_fq(const FieldTower& tw, std::vector<Fq>& m, int n);

} // namespace cbpir
