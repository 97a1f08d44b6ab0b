#pragma once

#include <gmpxx.h>

#include <iosfwd>
#include <vector>

#include "cbpir/scheme.hpp"

namespace cbpir {

// Closed-form accounting of the protocol: communication rates, the weight
// threshold that disables subset-rank analysis, the file-count threshold m0,
// attack complexity, and the user-side query-generation cost. Everything
// tabulated is exact rational / big-integer arithmetic; log space is used
// only where magnitudes force it.

struct RateBreakdown {
    mpq_class exact_rate;      // payload / (upload + download)
    mpq_class asymptotic_rate; // L -> infinity limit
    mpz_class upload_bits;
    mpz_class download_bits;
    mpz_class payload_bits;
};

// Full batch (f data queries plus the beta query): upload = (f+1) m delta n s b
// bits, download = (f+1) L n s b bits, payload = f L delta b bits; asymptotic
// rate f delta / ((f+1) n s).
RateBreakdown rate_exact(const SchemeParams& params);

// Single-query variant without the f-fold machinery; asymptotic rate delta/(ns),
// evaluated both as delta/(ns) and as 1 - (k + (v/s)(n-k))/n and asserted equal.
RateBreakdown rate_original(const SchemeParams& params);

// Smallest secret weight that makes every deleted-set rank profile flat:
// ceil(m + 1 - ns/delta). The identity f/((f+1) R_asym) = ns/delta is
// re-derived in exact rationals and asserted.
int weight_threshold(const SchemeParams& params, int m);

// m0 = wt + ceil((delta+1)(ns - 2 delta) / delta^2); for ns <= 2 delta the
// attack-favoring regime is vacuous and m0 = wt.
int m_zero(const SchemeParams& params, int wt);

// Exponent e such that the subset attack succeeds with probability at least
// 1 - q^-e against weight-wt secrets among m files: e = (m - m0) delta^2.
long long m_zero_success_exponent(const SchemeParams& params, int m, int wt);

enum class Region { red, gray, green };
const char* region_name(Region r);

struct ComplexityPoint {
    double log2_cost; // -inf at wt == m (no subsets to test)
    Region region;    // green: weight at/above threshold; gray: cost > 2^100
};

// log2 of C(m, wt) (m - wt) (ns)^3 via log-gamma, with the region
// classification used in fig3.csv.
ComplexityPoint attack_complexity(const SchemeParams& params, int m, int wt);

// Unique scalar multiples of Delta a client computes for a weight-wt secret:
// min(wt, q-1) — pigeonholed once the weight exceeds the number of nonzero
// scalars.
long long query_gen_cost(const SchemeParams& params, long long wt);

// Exact big-integer routes, used to cross-check the log-space evaluations.
mpz_class binomial_exact(unsigned long m, unsigned long wt);
mpz_class qbinom_exact(int n_, int k_, unsigned long q);
double log2_mpz(const mpz_class& value);
double log2_attack_complexity_exact(const SchemeParams& params, int m, int wt);
double logq_qbinom_exact(int n_, int k_, unsigned long q);

struct RateRow {
    int q, s, v, n, k, delta, f;
    mpq_class rate; // asymptotic
};

// The twelve (parameters, f) -> rate rows emitted into rates.csv.
std::vector<RateRow> rate_table_rows();

// The headline parameter set q=32, s=32, v=24, n=100, k=50, f=1 with the
// given file count.
SchemeParams headline_params(int m);

void write_rates_csv(std::ostream& os);
void write_fig3_csv(std::ostream& os);   // wt sweep at m = 100 and m = 10000
void write_bounds_csv(std::ostream& os); // failure-probability exponents, same sweep

} // namespace cbpir
