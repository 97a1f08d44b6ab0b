#include "cbpir/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "cbpir/attack.hpp"
#include "cbpir/errors.hpp"

namespace cbpir {

namespace {

mpq_class reduced(const mpz_class& num, const mpz_class& den) {
    mpq_class r(num, den);
    r.canonicalize();
    return r;
}

double log2_binomial(int m, int wt) {
    return (std::lgamma(m + 1.0) - std::lgamma(wt + 1.0) - std::lgamma(m - wt + 1.0)) /
           std::log(2.0);
}

} // namespace

RateBreakdown rate_exact(const SchemeParams& params) {
    params.validate();
    const mpz_class b = params.b, s = params.s, n = params.n, m = params.m, L = params.L,
                    f = params.f, delta = params.delta();
    RateBreakdown r;
    r.upload_bits = (f + 1) * m * delta * n * s * b;
    r.download_bits = (f + 1) * L * n * s * b;
    r.payload_bits = f * L * delta * b;
    r.exact_rate = reduced(r.payload_bits, r.upload_bits + r.download_bits);
    // Thm form f L delta / ((f+1)(m delta n + L n) s) must agree with the counts
    const mpq_class thm = reduced(f * L * delta, (f + 1) * (m * delta * n + L * n) * s);
    if (r.exact_rate != thm)
        throw Error("rate accounting mismatch");
    r.asymptotic_rate = reduced(f * delta, (f + 1) * n * s);
    return r;
}

RateBreakdown rate_original(const SchemeParams& params) {
    params.validate();
    const mpz_class b = params.b, s = params.s, v = params.v, n = params.n, k = params.k,
                    m = params.m, L = params.L, delta = params.delta();
    RateBreakdown r;
    r.upload_bits = m * delta * n * s * b;
    r.download_bits = L * n * s * b;
    r.payload_bits = L * delta * b;
    r.exact_rate = reduced(r.payload_bits, r.upload_bits + r.download_bits);
    r.asymptotic_rate = reduced(delta, n * s);
    // the equivalent closed form 1 - (k + (v/s)(n-k))/n
    const mpq_class alt = 1 - reduced(k * s + v * (n - k), n * s);
    if (r.asymptotic_rate != alt)
        throw Error("asymptotic rate forms disagree");
    return r;
}

int weight_threshold(const SchemeParams& params, int m) {
    const long long delta = params.delta();
    const long long ns = params.ns();
    if (params.f < 1 || delta <= 0)
        throw ParamError("weight threshold needs a nonzero asymptotic rate (delta > 0, f >= 1)");
    if (delta >= ns)
        throw ParamError("delta must be smaller than ns");
    // f / ((f+1) R_asym) = ns / delta, re-derived exactly
    const long dl = static_cast<long>(delta), nsl = static_cast<long>(ns);
    const mpq_class asym = reduced(mpz_class(params.f) * dl, mpz_class(params.f + 1) * nsl);
    const mpq_class lhs = reduced(params.f, 1) / (mpz_class(params.f + 1) * asym);
    if (lhs != reduced(nsl, dl))
        throw Error("threshold identity violated");
    // ceil(m + 1 - ns/delta) = m + 1 - floor(ns/delta)
    return static_cast<int>(m + 1 - ns / delta);
}

int m_zero(const SchemeParams& params, int wt) {
    const long long delta = params.delta();
    const long long ns = params.ns();
    if (delta <= 0)
        throw ParamError("m_zero needs delta > 0");
    if (ns <= 2 * delta)
        return wt; // no attack-favoring regime
    const long long num = (delta + 1) * (ns - 2 * delta);
    return static_cast<int>(wt + (num + delta * delta - 1) / (delta * delta));
}

long long m_zero_success_exponent(const SchemeParams& params, int m, int wt) {
    const long long delta = params.delta();
    return (m - m_zero(params, wt)) * delta * delta;
}

const char* region_name(Region r) {
    switch (r) {
    case Region::red: return "red";
    case Region::gray: return "gray";
    case Region::green: return "green";
    }
    return "?";
}

ComplexityPoint attack_complexity(const SchemeParams& params, int m, int wt) {
    if (wt < 0 || wt > m)
        throw ParamError("weight must lie in [0, m]");
    ComplexityPoint cp;
    if (wt == m) { // zero candidate subsets: attack impossible
        cp.log2_cost = -std::numeric_limits<double>::infinity();
        cp.region = Region::green;
        return cp;
    }
    const double ns = params.ns();
    cp.log2_cost = log2_binomial(m, wt) + std::log2(double(m - wt)) + 3.0 * std::log2(ns);
    if (wt >= weight_threshold(params, m))
        cp.region = Region::green;
    else if (cp.log2_cost > 100.0)
        cp.region = Region::gray;
    else
        cp.region = Region::red;
    return cp;
}

long long query_gen_cost(const SchemeParams& params, long long wt) {
    if (wt < 0)
        throw ParamError("weight must be nonnegative");
    return std::min<long long>(wt, static_cast<long long>(params.q()) - 1);
}

mpz_class binomial_exact(unsigned long m, unsigned long wt) {
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), m, wt);
    return r;
}

mpz_class qbinom_exact(int n_, int k_, unsigned long q) {
    if (k_ < 0 || k_ > n_)
        return 0;
    mpz_class num = 1, den = 1, p;
    for (int i = 0; i < k_; ++i) {
        mpz_ui_pow_ui(p.get_mpz_t(), q, static_cast<unsigned long>(n_ - i));
        num *= p - 1;
        mpz_ui_pow_ui(p.get_mpz_t(), q, static_cast<unsigned long>(i + 1));
        den *= p - 1;
    }
    mpq_class frac(num, den);
    frac.canonicalize();
    if (frac.get_den() != 1)
        throw Error("gaussian binomial is not an integer");
    return frac.get_num();
}

double log2_mpz(const mpz_class& value) {
    if (value == 0)
        return -std::numeric_limits<double>::infinity();
    signed long exp = 0;
    const double mant = mpz_get_d_2exp(&exp, value.get_mpz_t());
    return std::log2(mant) + static_cast<double>(exp);
}

double log2_attack_complexity_exact(const SchemeParams& params, int m, int wt) {
    if (wt < 0 || wt > m)
        throw ParamError("weight must lie in [0, m]");
    const mpz_class ns = params.ns();
    const mpz_class total = binomial_exact(m, wt) * (m - wt) * ns * ns * ns;
    return log2_mpz(total);
}

double logq_qbinom_exact(int n_, int k_, unsigned long q) {
    return log2_mpz(qbinom_exact(n_, k_, q)) / std::log2(double(q));
}

namespace {

SchemeParams table_params(int b, int s, int v, int f) {
    SchemeParams p;
    p.b = b;
    p.s = s;
    p.v = v;
    p.n = 100;
    p.k = 50;
    p.m = f + 1;
    p.L = 1;
    p.f = f;
    p.validate();
    return p;
}

} // namespace

std::vector<RateRow> rate_table_rows() {
    struct Group {
        int b, v, delta;
        std::vector<int> fs;
    };
    const std::vector<Group> groups = {
        {4, 31, 50, {1, 4, 32}}, {4, 16, 800, {1, 4, 32}}, {5, 31, 50, {1, 64}},
        {5, 26, 300, {1, 32}},   {5, 24, 400, {1, 8}},
    };
    std::vector<RateRow> rows;
    for (const auto& g : groups) {
        for (int f : g.fs) {
            const SchemeParams p = table_params(g.b, 32, g.v, f);
            if (p.delta() != g.delta)
                throw Error("tabulated delta mismatch");
            rows.push_back({static_cast<int>(p.q()), p.s, p.v, p.n, p.k, p.delta(), f,
                            rate_exact(p).asymptotic_rate});
        }
    }
    return rows;
}

SchemeParams headline_params(int m) {
    SchemeParams p;
    p.b = 5;
    p.s = 32;
    p.v = 24;
    p.n = 100;
    p.k = 50;
    p.m = m;
    p.L = 1;
    p.f = 1;
    p.validate();
    return p;
}

void write_rates_csv(std::ostream& os) {
    os << "q,s,v,n,k,delta,f,rate_num,rate_den\n";
    for (const auto& r : rate_table_rows())
        os << r.q << ',' << r.s << ',' << r.v << ',' << r.n << ',' << r.k << ',' << r.delta << ','
           << r.f << ',' << r.rate.get_num() << ',' << r.rate.get_den() << '\n';
}

void write_fig3_csv(std::ostream& os) {
    os << "m,wt,log2_cost,region\n";
    char buf[64];
    for (int m : {100, 10000}) {
        const SchemeParams p = headline_params(m);
        for (int wt = 1; wt <= m; ++wt) {
            const ComplexityPoint cp = attack_complexity(p, m, wt);
            std::snprintf(buf, sizeof buf, "%.6f", cp.log2_cost);
            os << m << ',' << wt << ',' << buf << ',' << region_name(cp.region) << '\n';
        }
    }
}

void write_bounds_csv(std::ostream& os) {
    os << "m,wt,logq_p_tight,logq_p_loose\n";
    char buf[128];
    for (int m : {100, 10000}) {
        const SchemeParams p = headline_params(m);
        for (int wt = 1; wt <= m; ++wt) {
            const FailureBound fb = failure_probability_bound(p, wt);
            std::snprintf(buf, sizeof buf, "%.6f,%.6f", fb.logq_tight, fb.logq_loose);
            os << m << ',' << wt << ',' << buf << '\n';
        }
    }
}

} // namespace cbpir
