#include <doctest.h>

#include "cbpir/analysis.hpp"

#include <cmath>
#include <sstream>

#include "cbpir/attack.hpp"

using namespace cbpir;

namespace {

SchemeParams desk(int b = 1, int f = 1) {
    SchemeParams p;
    p.b = b;
    p.s = 4;
    p.v = 2;
    p.n = 6;
    p.k = 3;
    p.m = 8;
    p.L = 4;
    p.f = f;
    return p;
}

mpq_class rat(long a, long b) {
    mpq_class r(a, b);
    r.canonicalize();
    return r;
}

bool close_log(double a, double b, double rel = 1e-9) {
    if (std::isinf(a) || std::isinf(b))
        return std::isinf(a) && std::isinf(b) && (a < 0) == (b < 0);
    return std::fabs(a - b) <= rel * std::max(1.0, std::fabs(b));
}

} // namespace

TEST_CASE("exact rate accounting at desk scale") {
    const SchemeParams p = desk();
    const RateBreakdown r = rate_exact(p);
    CHECK(r.upload_bits == 2 * 8 * 6 * 6 * 4 * 1);
    CHECK(r.download_bits == 2 * 4 * 6 * 4 * 1);
    CHECK(r.payload_bits == 1 * 4 * 6 * 1);
    CHECK(r.exact_rate == rat(24, 2496));
    CHECK(r.exact_rate == rat(1, 104));
    CHECK(r.asymptotic_rate == rat(1, 8));
}

TEST_CASE("single-query rate and its two closed forms") {
    SchemeParams p = desk();
    const RateBreakdown r = rate_original(p);
    CHECK(r.upload_bits == 8 * 6 * 6 * 4);
    CHECK(r.download_bits == 4 * 6 * 4);
    CHECK(r.payload_bits == 4 * 6);
    CHECK(r.asymptotic_rate == rat(1, 4)); // delta/(ns) = 6/24

    // smallest nonzero delta: v = s-1, n-k = 1 gives rate 1/(ns)
    SchemeParams tiny;
    tiny.b = 1;
    tiny.s = 4;
    tiny.v = 3;
    tiny.n = 2;
    tiny.k = 1;
    tiny.m = 2;
    tiny.L = 1;
    tiny.f = 1;
    CHECK(rate_original(tiny).asymptotic_rate == rat(1, 8));
}

TEST_CASE("asymptotic identity across the parameter space") {
    for (int b : {1, 2, 3})
        for (int s : {2, 4, 8})
            for (int v = 1; v < s; ++v)
                for (int n : {3, 6})
                    for (int k = 1; k < n; ++k)
                        for (int f : {1, 2, 5}) {
                            SchemeParams p;
                            p.b = b;
                            p.s = s;
                            p.v = v;
                            p.n = n;
                            p.k = k;
                            p.m = f + 1;
                            p.L = 1;
                            p.f = b == 1 ? 1 : f;
                            const RateBreakdown mod = rate_exact(p);
                            const RateBreakdown orig = rate_original(p);
                            const mpq_class ratio = rat(p.f, p.f + 1);
                            CHECK(mod.asymptotic_rate == ratio * orig.asymptotic_rate);
                            const mpq_class alt =
                                mpq_class(1) - rat(k * s + v * (n - k), n * s);
                            CHECK(mod.asymptotic_rate == ratio * alt);
                        }
}

TEST_CASE("published rate table rows as exact rationals") {
    const auto rows = rate_table_rows();
    REQUIRE(rows.size() == 12);
    const std::vector<mpq_class> expect = {
        rat(1, 128), rat(1, 80), rat(1, 66), rat(1, 8),
        rat(1, 5),   rat(8, 33), rat(1, 128), rat(1, 65),
        rat(3, 64),  rat(1, 11), rat(1, 16),  rat(1, 9),
    };
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK(rows[i].rate == expect[i]);
    CHECK(rows[3].delta == 800);
    CHECK(rows[7].f == 64);

    std::ostringstream os;
    write_rates_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "q,s,v,n,k,delta,f,rate_num,rate_den");
    int count = 0;
    std::string fifth;
    while (std::getline(is, line)) {
        if (count == 4)
            fifth = line;
        ++count;
    }
    CHECK(count == 12);
    CHECK(fifth == "16,32,16,100,50,800,4,1,5");
}

TEST_CASE("weight threshold values and guards") {
    CHECK(weight_threshold(headline_params(100), 100) == 93);
    CHECK(weight_threshold(headline_params(10000), 10000) == 9993);
    const SchemeParams p = desk();
    CHECK(weight_threshold(p, 8) == 8 + 1 - 4); // ns/delta = 4

    for (int m = 5; m < 50; ++m)
        CHECK(weight_threshold(p, m + 1) >= weight_threshold(p, m));

    SchemeParams bad = desk();
    bad.v = bad.s; // delta = 0
    CHECK_THROWS_AS(weight_threshold(bad, 8), ParamError);
    bad = desk();
    bad.f = 0;
    CHECK_THROWS_AS(weight_threshold(bad, 8), ParamError);
}

TEST_CASE("m_zero arithmetic") {
    const SchemeParams big = headline_params(100);
    for (int wt : {1, 50, 93})
        CHECK(m_zero(big, wt) == wt + 7); // ceil(401*2400/160000)

    const SchemeParams p = desk();
    CHECK(m_zero(p, 1) == 4); // ceil(7*12/36) = 3
    CHECK(m_zero_success_exponent(p, 8, 1) == (8 - 4) * 36);
    CHECK(m_zero_success_exponent(big, 100, 50) == (100 - 57) * 400LL * 400LL);

    SchemeParams boundary = desk();
    boundary.k = 2;
    boundary.v = 1; // delta = 12 = ns/2
    CHECK(boundary.delta() * 2 == boundary.ns());
    CHECK(m_zero(boundary, 5) == 5);
}

TEST_CASE("attack complexity against the exact big-integer route") {
    const SchemeParams p = desk();
    for (int m = 1; m <= 40; ++m)
        for (int wt = 0; wt <= m; ++wt) {
            const double approx = attack_complexity(p, m, wt).log2_cost;
            const double exact = log2_attack_complexity_exact(p, m, wt);
            CHECK(close_log(approx, exact));
        }
    CHECK(std::isinf(attack_complexity(p, 8, 8).log2_cost));
    CHECK(attack_complexity(p, 8, 8).region == Region::green);
    CHECK_THROWS_AS(attack_complexity(p, 8, 9), ParamError);
    CHECK_THROWS_AS(attack_complexity(p, 8, -1), ParamError);
}

TEST_CASE("complexity regions form the red/gray/red/green bands") {
    const SchemeParams p = headline_params(100);
    std::vector<Region> regions;
    for (int wt = 1; wt <= 100; ++wt)
        regions.push_back(attack_complexity(p, 100, wt).region);
    CHECK(regions.front() == Region::red);
    CHECK(regions[49] == Region::gray);
    CHECK(regions[91] == Region::red); // wt = 92
    for (int wt = 93; wt <= 100; ++wt)
        CHECK(regions[wt - 1] == Region::green);
    int transitions = 0;
    for (std::size_t i = 1; i < regions.size(); ++i)
        if (regions[i] != regions[i - 1])
            ++transitions;
    CHECK(transitions == 3);

    const SchemeParams big = headline_params(10000);
    CHECK(attack_complexity(big, 10000, 9992).region != Region::green);
    CHECK(attack_complexity(big, 10000, 9993).region == Region::green);
}

TEST_CASE("query generation cost pigeonholes at q-1") {
    CHECK(query_gen_cost(desk(1), 1) == 1);
    CHECK(query_gen_cost(desk(1), 7) == 1);
    CHECK(query_gen_cost(desk(2), 2) == 2);
    CHECK(query_gen_cost(desk(2), 7) == 3);
    CHECK(query_gen_cost(headline_params(100), 10000) == 31);
    CHECK(query_gen_cost(desk(1), 0) == 0);
    CHECK_THROWS_AS(query_gen_cost(desk(1), -1), ParamError);
}

TEST_CASE("measured unique scalar multiples match the cost model") {
    const SchemeParams p = desk(2);
    Rng rng(424u);
    for (int wt : {1, 2, 3, 5, 8}) {
        std::vector<Fq> w(p.m, 0u);
        for (int i = 0; i < wt; ++i)
            w[i] = 1u + static_cast<Fq>(i % (p.q() - 1));
        const QueryBundle bundle = gen_query(p, w, rng);
        CHECK(static_cast<long long>(bundle.distinct_scalars) == query_gen_cost(p, wt));
    }
}

TEST_CASE("exact gaussian binomials agree with the log-space route") {
    CHECK(qbinom_exact(2, 1, 2) == 3);
    CHECK(qbinom_exact(4, 2, 2) == 35);
    CHECK(qbinom_exact(5, 0, 2) == 1);
    CHECK(qbinom_exact(3, 4, 2) == 0);
    CHECK(binomial_exact(10, 5) == 252);
    CHECK(close_log(log2_mpz(mpz_class(1) << 100), 100.0));
    for (unsigned long q : {2ul, 4ul, 32ul})
        for (int a = 0; a <= 24; ++a)
            for (int b = 0; b <= a; ++b)
                CHECK(close_log(logq_qbinom_exact(a, b, q),
                                logq_gaussian_binomial(a, b, static_cast<std::uint32_t>(q))));
}

TEST_CASE("failure bound agrees with exact evaluation at desk scale") {
    SchemeParams p = desk();
    for (int wt = 1; wt <= 7; ++wt) {
        const FailureBound fb = failure_probability_bound(p, wt);
        const double tight = logq_qbinom_exact(18, 12, 2) - 36.0 * (8 - wt);
        CHECK(close_log(fb.logq_tight, tight));
        CHECK(fb.logq_tight <= fb.logq_loose + 1e-9);
    }
}

TEST_CASE("figure and bounds sweeps as CSV") {
    std::ostringstream os;
    write_fig3_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "m,wt,log2_cost,region");
    int rows = 0, greens = 0;
    std::string first, onset;
    while (std::getline(is, line)) {
        if (rows == 0)
            first = line;
        if (line.rfind("100,93,", 0) == 0)
            onset = line;
        if (line.find(",green") != std::string::npos)
            ++greens;
        ++rows;
    }
    CHECK(rows == 100 + 10000);
    CHECK(first.rfind("100,1,", 0) == 0);
    CHECK(first.find(",red") != std::string::npos);
    CHECK(onset.find(",green") != std::string::npos);
    CHECK(greens == 8 + 8); // wt >= 93 of 100 and wt >= 9993 of 10000

    std::ostringstream bs;
    write_bounds_csv(bs);
    std::istringstream bis(bs.str());
    std::getline(bis, line);
    CHECK(line == "m,wt,logq_p_tight,logq_p_loose");
    rows = 0;
    while (std::getline(bis, line))
        ++rows;
    CHECK(rows == 100 + 10000);
}
