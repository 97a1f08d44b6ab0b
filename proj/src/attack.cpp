#include "cbpir/attack.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace cbpir {

namespace {

// C(m, wt), saturating above `cap` (returns cap + 1 on exceedance)
std::uint64_t binom_capped(int m, int wt, std::uint64_t cap) {
    if (wt < 0 || wt > m)
        return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= wt; ++i) {
        const std::uint64_t num = static_cast<std::uint64_t>(m - wt + i);
        if (r > UINT64_MAX / num)
            return cap + 1;
        r = r * num / static_cast<std::uint64_t>(i); // exact: C(m-wt+i, i) is integral
        if (r > cap)
            return cap + 1;
    }
    return r;
}

std::vector<std::vector<int>> enumerate_subsets(int m, int wt) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(wt));
    for (int i = 0; i < wt; ++i)
        cur[static_cast<std::size_t>(i)] = i;
    for (;;) {
        out.push_back(cur);
        int i = wt - 1;
        while (i >= 0 && cur[static_cast<std::size_t>(i)] == m - wt + i)
            --i;
        if (i < 0)
            break;
        ++cur[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < wt; ++j)
            cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

} // namespace

std::string AttackReport::to_csv() const {
    std::ostringstream os;
    os << "deleted,rank\n";
    for (const auto& [subset, rank] : ranks) {
        for (std::size_t i = 0; i < subset.size(); ++i)
            os << (i ? " " : "") << subset[i];
        os << ',' << rank << '\n';
    }
    os << "summary," << (target_kind == Kind::original ? "original" : "modified") << ',';
    if (inferred) {
        for (std::size_t i = 0; i < inferred->size(); ++i)
            os << (i ? " " : "") << (*inferred)[i];
    } else {
        os << '-';
    }
    os << ',' << (success ? 1 : 0) << ',' << elimination_ops << '\n';
    return os.str();
}

void AttackReport::judge(std::span<const int> truth) {
    if (!inferred) {
        success = false;
        return;
    }
    std::vector<int> t(truth.begin(), truth.end());
    std::vector<int> got = *inferred;
    std::sort(t.begin(), t.end());
    std::sort(got.begin(), got.end());
    success = (t == got);
}

std::vector<int> subquery_ranks_single(const QueryMatrix& query, const SchemeParams& params,
                                       std::uint64_t* ops) {
    params.validate();
    const auto d = static_cast<std::size_t>(params.delta());
    const MatFq flat = query.q.flatten_fq();
    if (flat.rows() != static_cast<std::size_t>(params.m) * d ||
        flat.cols() != static_cast<std::size_t>(params.ns()))
        throw DimError("query dimensions disagree with params");
    std::vector<int> ranks(static_cast<std::size_t>(params.m));
    for (int j = 0; j < params.m; ++j) {
        const int block[] = {j};
        ranks[static_cast<std::size_t>(j)] = flat.drop_row_blocks(block, d).rank(ops);
    }
    return ranks;
}

AttackReport attack_original(const QueryMatrix& query, const SchemeParams& params) {
    AttackReport report;
    report.target_kind = AttackReport::Kind::original;
    std::uint64_t ops = 0;
    const std::vector<int> ranks = subquery_ranks_single(query, params, &ops);
    report.elimination_ops = ops;
    report.ranks.reserve(ranks.size());
    for (int j = 0; j < params.m; ++j)
        report.ranks.emplace_back(std::vector<int>{j}, ranks[static_cast<std::size_t>(j)]);
    const auto min_it = std::min_element(ranks.begin(), ranks.end());
    if (std::count(ranks.begin(), ranks.end(), *min_it) == 1)
        report.inferred = std::vector<int>{static_cast<int>(min_it - ranks.begin())};
    return report;
}

AttackReport attack_modified(const QueryMatrix& query, const SchemeParams& params, int wt,
                             const AttackOptions& options) {
    params.validate();
    if (wt < 1 || wt > params.m)
        throw ParamError("assumed weight must be in [1, m]");
    AttackReport report;
    report.target_kind = AttackReport::Kind::modified;
    if (wt == params.m)
        return report; // nothing to enumerate; declared failure

    if (binom_capped(params.m, wt, options.max_subsets) > options.max_subsets)
        throw CapExceeded("subset enumeration cap exceeded");
    const auto subsets = enumerate_subsets(params.m, wt);

    const auto d = static_cast<std::size_t>(params.delta());
    const MatFq flat = query.q.flatten_fq();
    if (flat.rows() != static_cast<std::size_t>(params.m) * d ||
        flat.cols() != static_cast<std::size_t>(params.ns()))
        throw DimError("query dimensions disagree with params");

    std::vector<int> ranks(subsets.size());
    std::atomic<std::uint64_t> total_ops{0};
    const int nthreads = std::max(1, options.threads);
    auto worker = [&](std::size_t begin, std::size_t end) {
        std::uint64_t ops = 0;
        for (std::size_t i = begin; i < end; ++i)
            ranks[i] = flat.drop_row_blocks(subsets[i], d).rank(&ops);
        total_ops += ops;
    };
    if (nthreads == 1 || subsets.size() < 2) {
        worker(0, subsets.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (subsets.size() + static_cast<std::size_t>(nthreads) - 1) /
                                  static_cast<std::size_t>(nthreads);
        for (int t = 0; t < nthreads; ++t) {
            const std::size_t begin = static_cast<std::size_t>(t) * chunk;
            if (begin >= subsets.size())
                break;
            pool.emplace_back(worker, begin, std::min(begin + chunk, subsets.size()));
        }
        for (auto& th : pool)
            th.join();
    }
    report.elimination_ops = total_ops.load();

    const int threshold = params.ns() - params.delta();
    std::optional<std::size_t> candidate;
    bool unique = true;
    report.ranks.reserve(subsets.size());
    for (std::size_t i = 0; i < subsets.size(); ++i) {
        report.ranks.emplace_back(subsets[i], ranks[i]);
        if (ranks[i] <= threshold) {
            if (candidate)
                unique = false;
            else
                candidate = i;
        }
    }
    if (candidate && unique)
        report.inferred = subsets[*candidate];
    return report;
}

double logq_gaussian_binomial(int n_, int k_, std::uint32_t q) {
    if (k_ < 0 || k_ > n_)
        throw ParamError("gaussian binomial requires 0 <= k <= n");
    const double lq = std::log(static_cast<double>(q));
    // [n k]_q = prod_{i=0}^{k-1} (q^(n-i) - 1) / (q^(i+1) - 1)
    auto logq_pow_minus_one = [&](int a) {
        // log_q(q^a - 1) = a + log(1 - q^-a)/log q
        return static_cast<double>(a) + std::log1p(-std::pow(static_cast<double>(q), -a)) / lq;
    };
    double acc = 0.0;
    for (int i = 0; i < k_; ++i)
        acc += logq_pow_minus_one(n_ - i) - logq_pow_minus_one(i + 1);
    return acc;
}

FailureBound failure_probability_bound(const SchemeParams& params, int wt) {
    params.validate();
    if (wt < 1 || wt > params.m)
        throw ParamError("weight must be in [1, m]");
    const int d = params.delta();
    const int ns = params.ns();
    if (2 * d > ns)
        throw ParamError("bound requires delta <= ns/2");
    const double drop = static_cast<double>(d) * d * (params.m - wt);
    FailureBound out{};
    out.logq_tight = logq_gaussian_binomial(ns - d, ns - 2 * d, params.q()) - drop;
    out.logq_loose = static_cast<double>(d + 1) * (ns - 2 * d) - drop;
    return out;
}

} // namespace cbpir
