#pragma once

#include <optional>
#include <string>

#include "cbpir/scheme.hpp"

namespace cbpir {

// Server-side rank analysis of a received query. Everything here uses only
// public parameters and the query matrix itself — never client secrets.

struct AttackReport {
    enum class Kind { original, modified };
    Kind target_kind = Kind::original;
    // (deleted block set, F_q-rank of the query with those blocks removed),
    // in enumeration order
    std::vector<std::pair<std::vector<int>, int>> ranks;
    // the inferred index ({i}) or support set; nullopt = declared failure
    std::optional<std::vector<int>> inferred;
    // set by judge() against harness-side ground truth; never by the attack
    bool success = false;
    std::uint64_t elimination_ops = 0;

    // one "deleted,rank" line per entry plus a trailing summary line
    std::string to_csv() const;
    // marks success iff inferred equals truth (sorted comparison)
    void judge(std::span<const int> truth);
};

struct AttackOptions {
    std::uint64_t max_subsets = 1u << 20; // enumeration guard
    int threads = 1;
};

// rank[j] = F_q-rank of the query with row block j deleted, for each of the
// m blocks; flattening is over the power basis (rank is basis-independent)
std::vector<int> subquery_ranks_single(const QueryMatrix& query, const SchemeParams& params,
                                       std::uint64_t* ops = nullptr);

// The single-index attack: argmin over the m single-block deletions, with a
// strict-uniqueness tie rule (ties are a declared failure).
AttackReport attack_original(const QueryMatrix& query, const SchemeParams& params);

// The extension against low-weight secrets: enumerate all C(m, wt) deleted
// sets J and flag those whose rank drops to ns - delta or below; a unique
// flagged set is inferred as supp(secret_row). wt = m returns an immediate
// failure (nothing to enumerate). Throws CapExceeded if C(m, wt) exceeds
// options.max_subsets.
AttackReport attack_modified(const QueryMatrix& query, const SchemeParams& params, int wt,
                             const AttackOptions& options = {});

// log_q of the Gaussian binomial coefficient [n_ choose k_]_q via the product
// formula, evaluated in log space
double logq_gaussian_binomial(int n_, int k_, std::uint32_t q);

struct FailureBound {
    double logq_tight; // log_q( [ns-delta choose ns-2delta]_q * q^(-delta^2 (m-wt)) )
    double logq_loose; // (delta+1)(ns-2delta) - delta^2 (m-wt)
};

// Probability that the rank profile fails to isolate the secret support,
// per the union bound; both forms returned as log_q values.
FailureBound failure_probability_bound(const SchemeParams& params, int wt);

} // namespace cbpir
