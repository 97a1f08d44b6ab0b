#include "cbpir/gf.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>

namespace cbpir {

namespace {

constexpr int kSearchCap = 100000;

// ---- polynomials over F_2, packed in a uint64 (bit i = coeff of x^i) ----

int gf2_deg(std::uint64_t p) { return p ? 63 - std::countl_zero(p) : -1; }

std::uint64_t gf2_mulmod(std::uint64_t a, std::uint64_t c, std::uint64_t f) {
    const int df = gf2_deg(f);
    std::uint64_t r = 0;
    while (c) {
        if (c & 1u)
            r ^= a;
        c >>= 1;
        a <<= 1;
        if (gf2_deg(a) == df)
            a ^= f;
    }
    int d = gf2_deg(r);
    while (d >= df) {
        r ^= f << (d - df);
        d = gf2_deg(r);
    }
    return r;
}

std::uint64_t gf2_gcd(std::uint64_t a, std::uint64_t c) {
    while (c) {
        int da = gf2_deg(a), dc = gf2_deg(c);
        while (da >= dc) {
            a ^= c << (da - dc);
            da = gf2_deg(a);
        }
        std::swap(a, c);
    }
    return a;
}

std::vector<int> prime_divisors(int n) {
    std::vector<int> out;
    for (int p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            out.push_back(p);
            while (n % p == 0)
                n /= p;
        }
    }
    if (n > 1)
        out.push_back(n);
    return out;
}

// Rabin test: f (degree d) is irreducible over F_2 iff x^(2^d) = x (mod f)
// and gcd(x^(2^(d/p)) - x, f) = 1 for every prime p | d.
bool gf2_irreducible(std::uint64_t f, int d) {
    if (gf2_deg(f) != d || d < 1)
        return false;
    if (d == 1)
        return true;
    if ((f & 1u) == 0)
        return false; // divisible by x
    auto frob = [&](int k) {
        std::uint64_t h = 2; // the polynomial x
        for (int i = 0; i < k; ++i)
            h = gf2_mulmod(h, h, f);
        return h;
    };
    if (frob(d) != 2)
        return false;
    for (int p : prime_divisors(d)) {
        if (gf2_gcd(frob(d / p) ^ 2u, f) != 1u)
            return false;
    }
    return true;
}

std::uint64_t find_irreducible_f2(int d, Rng& rng) {
    for (int iter = 0; iter < kSearchCap; ++iter) {
        std::uint64_t f = (1ull << d) | 1u;
        for (int i = 1; i < d; ++i)
            if (rng.coin())
                f |= 1ull << i;
        if (gf2_irreducible(f, d))
            return f;
    }
    throw CapExceeded("no irreducible degree-" + std::to_string(d) + " polynomial over F_2 found");
}

// ---- polynomials over F_q (little-endian coefficient vectors) ----

int fqp_deg(const std::vector<Fq>& p) {
    for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i)
        if (p[static_cast<std::size_t>(i)] != 0)
            return i;
    return -1;
}

// r = r mod f, f monic of degree df
void fqp_reduce(const FieldTower& tw, std::vector<Fq>& r, const std::vector<Fq>& f, int df) {
    for (int d = static_cast<int>(r.size()) - 1; d >= df; --d) {
        const Fq c = r[static_cast<std::size_t>(d)];
        if (c == 0)
            continue;
        r[static_cast<std::size_t>(d)] = 0;
        for (int j = 0; j < df; ++j)
            r[static_cast<std::size_t>(d - df + j)] ^=
                tw.fq_mul(c, f[static_cast<std::size_t>(j)]);
    }
    r.resize(static_cast<std::size_t>(df));
}

// squaring in characteristic 2 interleaves coefficients
std::vector<Fq> fqp_sqmod(const FieldTower& tw, const std::vector<Fq>& a,
                          const std::vector<Fq>& f, int df) {
    std::vector<Fq> r(static_cast<std::size_t>(2 * df - 1), 0);
    for (int i = 0; i < df; ++i) {
        const Fq c = a[static_cast<std::size_t>(i)];
        if (c != 0)
            r[static_cast<std::size_t>(2 * i)] = tw.fq_mul(c, c);
    }
    fqp_reduce(tw, r, f, df);
    return r;
}

std::vector<Fq> fqp_gcd(const FieldTower& tw, std::vector<Fq> a, std::vector<Fq> c) {
    int da = fqp_deg(a), dc = fqp_deg(c);
    while (dc >= 0) {
        // a = a mod c
        const Fq lead_inv = tw.fq_inv(c[static_cast<std::size_t>(dc)]);
        while (da >= dc) {
            const Fq coef = tw.fq_mul(a[static_cast<std::size_t>(da)], lead_inv);
            for (int j = 0; j <= dc; ++j)
                a[static_cast<std::size_t>(da - dc + j)] ^=
                    tw.fq_mul(coef, c[static_cast<std::size_t>(j)]);
            da = fqp_deg(a);
        }
        std::swap(a, c);
        std::swap(da, dc);
    }
    return a;
}

// x^(2^k) mod f by k squarings
std::vector<Fq> fqp_frobenius(const FieldTower& tw, int k, const std::vector<Fq>& f, int df) {
    std::vector<Fq> h(static_cast<std::size_t>(df), 0);
    if (df == 1) {
        // x mod f is a constant; squaring stays in F_q
        Fq c = tw.fq_mul(1u, f[0]); // x = -f0 = f0
        h[0] = c;
        for (int i = 0; i < k; ++i)
            h[0] = tw.fq_mul(h[0], h[0]);
        return h;
    }
    h[1] = 1;
    for (int i = 0; i < k; ++i)
        h = fqp_sqmod(tw, h, f, df);
    return h;
}

bool fqp_irreducible(const FieldTower& tw, const std::vector<Fq>& f, int s) {
    if (fqp_deg(f) != s || s < 1)
        return false;
    if (f[0] == 0)
        return false; // divisible by y
    const int bs = tw.b() * s;
    std::vector<Fq> x(static_cast<std::size_t>(s), 0);
    x[1] = 1;
    if (fqp_frobenius(tw, bs, f, s) != x)
        return false;
    for (int p : prime_divisors(s)) {
        auto h = fqp_frobenius(tw, bs / p, f, s);
        h[1] ^= 1u; // h - x
        auto g = fqp_gcd(tw, h, f);
        if (fqp_deg(g) != 0)
            return false;
    }
    return true;
}

std::vector<Fq> find_irreducible_fq(const FieldTower& tw, int s, Rng& rng) {
    const std::uint32_t q = tw.q();
    for (int iter = 0; iter < kSearchCap; ++iter) {
        std::vector<Fq> f(static_cast<std::size_t>(s) + 1, 0);
        f[static_cast<std::size_t>(s)] = 1;
        f[0] = rng.below_nonzero(q);
        for (int i = 1; i < s; ++i)
            f[static_cast<std::size_t>(i)] = rng.below(q);
        if (fqp_irreducible(tw, f, s))
            return f;
    }
    throw CapExceeded("no irreducible degree-" + std::to_string(s) + " polynomial over F_q found");
}

} // namespace

// ---- FieldTower ----

FieldTower::FieldTower(int b, int s, std::uint64_t seed) : b_(b), s_(s) {
    if (b < 1 || b > kMaxB)
        throw ParamError("b out of range [1,31]");
    if (s < 2 || s > kMaxS)
        throw ParamError("s out of range [2,255]");
    Rng rng(seed);
    base_mod_ = find_irreducible_f2(b, rng);
    build_tables();
    ext_mod_ = find_irreducible_fq(*this, s, rng);
}

FieldTower::FieldTower(int b, std::uint64_t base_modulus, int s, std::vector<Fq> ext_modulus)
    : b_(b), s_(s), base_mod_(base_modulus), ext_mod_(std::move(ext_modulus)) {
    validate_and_init();
}

void FieldTower::validate_and_init() {
    if (b_ < 1 || b_ > kMaxB)
        throw ParamError("b out of range [1,31]");
    if (s_ < 2 || s_ > kMaxS)
        throw ParamError("s out of range [2,255]");
    if (!gf2_irreducible(base_mod_, b_))
        throw ParamError("base modulus not irreducible over F_2");
    for (Fq c : ext_mod_)
        if (c >= q())
            throw ParamError("ext modulus coefficient out of range");
    build_tables();
    if (static_cast<int>(ext_mod_.size()) != s_ + 1 || ext_mod_[static_cast<std::size_t>(s_)] != 1)
        throw ParamError("ext modulus must be monic of degree s");
    if (!fqp_irreducible(*this, ext_mod_, s_))
        throw ParamError("ext modulus not irreducible over F_q");
}

Fq FieldTower::fq_mul_generic(Fq a, Fq c) const {
    std::uint64_t r = 0;
    const std::uint64_t aa = a;
    for (std::uint32_t bits = c; bits; bits &= bits - 1)
        r ^= aa << std::countr_zero(bits);
    for (int i = 2 * b_ - 2; i >= b_; --i)
        if ((r >> i) & 1u)
            r ^= base_mod_ << (i - b_);
    return static_cast<Fq>(r);
}

Fq FieldTower::fq_inv(Fq a) const {
    if (a == 0)
        throw Error("inversion of zero in F_q");
    if (!inv_tab_.empty())
        return inv_tab_[a];
    // Fermat: a^(q-2) = prod_{i=1}^{b-1} a^(2^i)
    Fq acc = 1, t = a;
    for (int i = 1; i < b_; ++i) {
        t = fq_mul(t, t);
        acc = fq_mul(acc, t);
    }
    return acc;
}

void FieldTower::build_tables() {
    if (b_ > 8)
        return;
    const std::uint32_t qq = q();
    mul_tab_.assign(static_cast<std::size_t>(qq) * qq, 0);
    for (std::uint32_t a = 0; a < qq; ++a)
        for (std::uint32_t c = a; c < qq; ++c) {
            const auto p = static_cast<std::uint8_t>(fq_mul_generic(a, c));
            mul_tab_[(static_cast<std::size_t>(a) << b_) | c] = p;
            mul_tab_[(static_cast<std::size_t>(c) << b_) | a] = p;
        }
    inv_tab_.assign(qq, 0);
    for (std::uint32_t a = 1; a < qq; ++a) {
        Fq acc = 1, t = a;
        for (int i = 1; i < b_; ++i) {
            t = fq_mul(t, t);
            acc = fq_mul(acc, t);
        }
        inv_tab_[a] = static_cast<std::uint8_t>(acc);
    }
}

void FieldTower::fqs_add(std::span<const Fq> a, std::span<const Fq> c, std::span<Fq> out) const {
    for (int i = 0; i < s_; ++i)
        out[static_cast<std::size_t>(i)] =
            a[static_cast<std::size_t>(i)] ^ c[static_cast<std::size_t>(i)];
}

void FieldTower::fqs_mul(std::span<const Fq> a, std::span<const Fq> c, std::span<Fq> out) const {
    Fq tmp[2 * kMaxS];
    const int s = s_;
    std::memset(tmp, 0, sizeof(Fq) * static_cast<std::size_t>(2 * s - 1));
    for (int i = 0; i < s; ++i) {
        const Fq ai = a[static_cast<std::size_t>(i)];
        if (ai == 0)
            continue;
        for (int j = 0; j < s; ++j)
            tmp[i + j] ^= fq_mul(ai, c[static_cast<std::size_t>(j)]);
    }
    for (int d = 2 * s - 2; d >= s; --d) {
        const Fq coef = tmp[d];
        if (coef == 0)
            continue;
        tmp[d] = 0;
        for (int j = 0; j < s; ++j)
            tmp[d - s + j] ^= fq_mul(coef, ext_mod_[static_cast<std::size_t>(j)]);
    }
    std::copy(tmp, tmp + s, out.begin());
}

void FieldTower::fqs_mul_acc(std::span<const Fq> a, std::span<const Fq> c,
                             std::span<Fq> acc) const {
    Fq tmp[kMaxS];
    fqs_mul(a, c, std::span<Fq>(tmp, static_cast<std::size_t>(s_)));
    for (int i = 0; i < s_; ++i)
        acc[static_cast<std::size_t>(i)] ^= tmp[i];
}

void FieldTower::fqs_inv(std::span<const Fq> a, std::span<Fq> out) const {
    if (is_zero(a))
        throw Error("inversion of zero in F_{q^s}");
    // a^(q^s - 2) = prod_{i=1}^{bs-1} a^(2^i)
    Fq t[kMaxS], acc[kMaxS];
    const auto sz = static_cast<std::size_t>(s_);
    std::copy(a.begin(), a.end(), t);
    std::fill(acc, acc + sz, 0u);
    acc[0] = 1;
    std::span<Fq> ts(t, sz), accs(acc, sz);
    const int bs = b_ * s_;
    for (int i = 1; i < bs; ++i) {
        fqs_mul(ts, ts, ts);
        fqs_mul(accs, ts, accs);
    }
    std::copy(acc, acc + sz, out.begin());
}

void FieldTower::fqs_scale(Fq scalar, std::span<const Fq> a, std::span<Fq> out) const {
    for (int i = 0; i < s_; ++i)
        out[static_cast<std::size_t>(i)] = fq_mul(scalar, a[static_cast<std::size_t>(i)]);
}

void FieldTower::fqs_scale_acc(Fq scalar, std::span<const Fq> a, std::span<Fq> acc) const {
    for (int i = 0; i < s_; ++i)
        acc[static_cast<std::size_t>(i)] ^= fq_mul(scalar, a[static_cast<std::size_t>(i)]);
}

bool FieldTower::is_zero(std::span<const Fq> a) {
    return std::all_of(a.begin(), a.end(), [](Fq c) { return c == 0; });
}

void FieldTower::fqs_one(std::span<Fq> out) const {
    std::fill(out.begin(), out.end(), 0u);
    out[0] = 1;
}

void FieldTower::fqs_random(Rng& rng, std::span<Fq> out) const {
    for (int i = 0; i < s_; ++i)
        out[static_cast<std::size_t>(i)] = rng.below(q());
}

void FieldTower::serialize(Bytes& out) const {
    out.push_back(static_cast<std::uint8_t>(b_));
    put_u64le(out, base_mod_);
    out.push_back(static_cast<std::uint8_t>(s_));
    BitWriter bw(out);
    for (Fq c : ext_mod_)
        bw.put(c, b_);
}

FieldTower FieldTower::parse(ByteReader& in) {
    const int b = in.u8();
    const std::uint64_t base = in.u64le();
    const int s = in.u8();
    if (b < 1 || b > kMaxB || s < 2 || s > kMaxS)
        throw SerialError("bad tower parameters");
    const std::size_t nbytes = (static_cast<std::size_t>(s + 1) * static_cast<std::size_t>(b) + 7) / 8;
    BitReader br(in.take(nbytes));
    std::vector<Fq> ext(static_cast<std::size_t>(s) + 1);
    for (auto& c : ext)
        c = br.get(b);
    try {
        return FieldTower(b, base, s, std::move(ext));
    } catch (const ParamError& e) {
        throw SerialError(std::string("invalid tower: ") + e.what());
    }
}

TowerPtr make_tower(int b, int s, std::uint64_t seed) {
    return std::make_shared<const FieldTower>(b, s, seed);
}

// ---- small F_q matrix inversion ----

bool invert_small_fq(const FieldTower& tw, std::vector<Fq>& m, int n) {
    const auto nn = static_cast<std::size_t>(n);
    std::vector<Fq> aug(nn * 2 * nn, 0);
    for (std::size_t r = 0; r < nn; ++r) {
        std::copy(m.begin() + static_cast<std::ptrdiff_t>(r * nn),
                  m.begin() + static_cast<std::ptrdiff_t>((r + 1) * nn), aug.begin() + static_cast<std::ptrdiff_t>(r * 2 * nn));
        aug[r * 2 * nn + nn + r] = 1;
    }
    const std::size_t w = 2 * nn;
    for (std::size_t col = 0; col < nn; ++col) {
        std::size_t piv = col;
        while (piv < nn && aug[piv * w + col] == 0)
            ++piv;
        if (piv == nn)
            return false;
        if (piv != col)
            for (std::size_t j = 0; j < w; ++j)
                std::swap(aug[piv * w + j], aug[col * w + j]);
        const Fq pinv = tw.fq_inv(aug[col * w + col]);
        for (std::size_t j = 0; j < w; ++j)
            aug[col * w + j] = tw.fq_mul(pinv, aug[col * w + j]);
        for (std::size_t r = 0; r < nn; ++r) {
            if (r == col)
                continue;
            const Fq factor = aug[r * w + col];
            if (factor == 0)
                continue;
            for (std::size_t j = 0; j < w; ++j)
                aug[r * w + j] ^= tw.fq_mul(factor, aug[col * w + j]);
        }
    }
    for (std::size_t r = 0; r < nn; ++r)
        std::copy(aug.begin() + static_cast<std::ptrdiff_t>(r * w + nn),
                  aug.begin() + static_cast<std::ptrdiff_t>(r * w + w),
                  m.begin() + static_cast<std::ptrdiff_t>(r * nn));
    return true;
}

// ---- BasisGamma ----

BasisGamma::BasisGamma(TowerPtr tower, int v, std::vector<Fq> to_gamma,
                       std::vector<Fq> from_gamma)
    : tower_(std::move(tower)), v_(v), to_gamma_(std::move(to_gamma)),
      from_gamma_(std::move(from_gamma)) {}

BasisGamma BasisGamma::sample(TowerPtr tower, int v, Rng& rng) {
    const int s = tower->s();
    if (v <= 0 || v >= s)
        throw ParamError("basis split v must satisfy 0 < v < s");
    const std::uint32_t q = tower->q();
    const auto ss = static_cast<std::size_t>(s);
    for (;;) {
        std::vector<Fq> to(ss * ss);
        for (auto& c : to)
            c = rng.below(q);
        std::vector<Fq> from = to;
        if (invert_small_fq(*tower, from, s))
            return BasisGamma(std::move(tower), v, std::move(to), std::move(from));
    }
}

BasisGamma BasisGamma::identity(TowerPtr tower, int v) {
    const int s = tower->s();
    if (v <= 0 || v >= s)
        throw ParamError("basis split v must satisfy 0 < v < s");
    const auto ss = static_cast<std::size_t>(s);
    std::vector<Fq> id(ss * ss, 0);
    for (std::size_t i = 0; i < ss; ++i)
        id[i * ss + i] = 1;
    return BasisGamma(std::move(tower), v, id, id);
}

namespace {
// out = m * x for row-major s x s matrix m
void matvec(const FieldTower& tw, const std::vector<Fq>& m, int s, std::span<const Fq> x,
            std::span<Fq> out) {
    const auto ss = static_cast<std::size_t>(s);
    for (std::size_t i = 0; i < ss; ++i) {
        Fq acc = 0;
        const Fq* row = &m[i * ss];
        for (std::size_t j = 0; j < ss; ++j)
            if (x[j] != 0)
                acc ^= tw.fq_mul(row[j], x[j]);
        out[i] = acc;
    }
}
} // namespace

void BasisGamma::to_coords(std::span<const Fq> power, std::span<Fq> gamma) const {
    matvec(*tower_, to_gamma_, s(), power, gamma);
}

void BasisGamma::from_coords(std::span<const Fq> gamma, std::span<Fq> power) const {
    matvec(*tower_, from_gamma_, s(), gamma, power);
}

void BasisGamma::project_v(std::span<const Fq> x, std::span<Fq> out) const {
    Fq g[FieldTower::kMaxS];
    const auto ss = static_cast<std::size_t>(s());
    std::span<Fq> gs(g, ss);
    to_coords(x, gs);
    std::fill(g + v_, g + ss, 0u);
    from_coords(gs, out);
}

void BasisGamma::project_w(std::span<const Fq> x, std::span<Fq> out) const {
    Fq g[FieldTower::kMaxS];
    const auto ss = static_cast<std::size_t>(s());
    std::span<Fq> gs(g, ss);
    to_coords(x, gs);
    std::fill(g, g + v_, 0u);
    from_coords(gs, out);
}

void BasisGamma::w_coords(std::span<const Fq> x, std::span<Fq> out) const {
    Fq g[FieldTower::kMaxS];
    const auto ss = static_cast<std::size_t>(s());
    std::span<Fq> gs(g, ss);
    to_coords(x, gs);
    std::copy(g + v_, g + ss, out.begin());
}

void BasisGamma::from_v_coords(std::span<const Fq> vc, std::span<Fq> power) const {
    Fq g[FieldTower::kMaxS] = {};
    const auto ss = static_cast<std::size_t>(s());
    std::copy(vc.begin(), vc.end(), g);
    from_coords(std::span<const Fq>(g, ss), power);
}

void BasisGamma::from_w_coords(std::span<const Fq> wc, std::span<Fq> power) const {
    Fq g[FieldTower::kMaxS] = {};
    const auto ss = static_cast<std::size_t>(s());
    std::copy(wc.begin(), wc.end(), g + v_);
    from_coords(std::span<const Fq>(g, ss), power);
}

std::vector<Fq> BasisGamma::gamma_element(int i) const {
    const auto ss = static_cast<std::size_t>(s());
    std::vector<Fq> out(ss);
    for (std::size_t r = 0; r < ss; ++r)
        out[r] = from_gamma_[r * ss + static_cast<std::size_t>(i - 1)];
    return out;
}

void BasisGamma::random_in_v(Rng& rng, std::span<Fq> power) const {
    Fq c[FieldTower::kMaxS];
    for (int i = 0; i < v_; ++i)
        c[i] = rng.below(tower_->q());
    from_v_coords(std::span<const Fq>(c, static_cast<std::size_t>(v_)), power);
}

void BasisGamma::random_in_w(Rng& rng, std::span<Fq> power) const {
    Fq c[FieldTower::kMaxS];
    const int wdim = s() - v_;
    for (int i = 0; i < wdim; ++i)
        c[i] = rng.below(tower_->q());
    from_w_coords(std::span<const Fq>(c, static_cast<std::size_t>(wdim)), power);
}

} // namespace cbpir
