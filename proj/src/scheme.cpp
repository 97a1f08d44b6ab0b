#include "cbpir/scheme.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace cbpir {

namespace {

constexpr int kPlanCap = 100000;
constexpr std::array<std::uint8_t, 6> kMagic = {'C', 'B', 'P', 'I', 'R', '\0'};

// W-component flattening: each entry contributes its s-v Gamma coordinates
// above the split, so a row of cols entries becomes cols*(s-v) F_q values.
MatFq flatten_w(const MatFqs& a, const BasisGamma& basis) {
    const auto wd = static_cast<std::size_t>(basis.s() - basis.v());
    MatFq out(a.tower(), a.rows(), a.cols() * wd);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto orow = out.row(r);
        for (std::size_t c = 0; c < a.cols(); ++c)
            basis.w_coords(a.at(r, c), orow.subspan(c * wd, wd));
    }
    return out;
}

int row_weight(std::span<const Fq> row) {
    return static_cast<int>(std::count_if(row.begin(), row.end(), [](Fq c) { return c != 0; }));
}

SecretPlan plan_impl(const SchemeParams& params, std::span<const int> j_set,
                     const std::vector<Fq>* fixed_beta, Rng& rng) {
    params.validate();
    if (static_cast<int>(j_set.size()) != params.f)
        throw ParamError("plan requires exactly f file indices");
    for (int j : j_set)
        if (j < 0 || j >= params.m)
            throw ParamError("file index out of range");
    for (std::size_t a = 0; a < j_set.size(); ++a)
        for (std::size_t c = a + 1; c < j_set.size(); ++c)
            if (j_set[a] == j_set[c])
                throw ParamError("file indices must be distinct");
    if (fixed_beta) {
        if (static_cast<int>(fixed_beta->size()) != params.m)
            throw ParamError("beta must have length m");
        for (Fq c : *fixed_beta)
            if (c == 0 || c >= params.q())
                throw ParamError("beta entries must be nonzero field elements");
    }

    const TowerPtr tower = canonical_tower(params);
    const std::uint32_t q = params.q();
    const auto f = static_cast<std::size_t>(params.f);
    const auto m = static_cast<std::size_t>(params.m);
    const int target = params.effective_weight_target();

    for (int iter = 0; iter < kPlanCap; ++iter) {
        MatFq mt(tower, f, f + 1);
        for (std::size_t r = 0; r < f; ++r)
            for (std::size_t c = 0; c <= f; ++c)
                mt.set(r, c, rng.below_nonzero(q));
        if (!mt.col_range(0, f).try_inverse())
            continue;
        std::vector<Fq> beta;
        if (fixed_beta) {
            beta = *fixed_beta;
        } else {
            beta.resize(m);
            for (auto& c : beta)
                c = rng.below_nonzero(q);
        }
        MatFq rows(tower, f + 1, m);
        for (std::size_t j = 0; j < m; ++j)
            rows.set(f, j, beta[j]);
        for (std::size_t i = 0; i < f; ++i) {
            const Fq bcoef = mt.at(i, f);
            for (std::size_t j = 0; j < m; ++j)
                rows.set(i, j, tower->fq_mul(bcoef, beta[j]));
            for (std::size_t t = 0; t < f; ++t) {
                const auto jt = static_cast<std::size_t>(j_set[t]);
                rows.set(i, jt, rows.at(i, jt) ^ mt.at(i, t));
            }
        }
        bool ok = true;
        for (std::size_t i = 0; i < f && ok; ++i)
            ok = row_weight(rows.row(i)) >= target;
        if (!ok)
            continue;
        return SecretPlan{std::vector<int>(j_set.begin(), j_set.end()), std::move(mt),
                          std::move(beta), std::move(rows)};
    }
    throw CapExceeded("secret plan resampling cap hit; weight target infeasible for q and f");
}

} // namespace

// ---- SchemeParams ----

void SchemeParams::validate() const {
    if (b < 1 || b > 15)
        throw ParamError("b must be in [1, 15]");
    if (s < 2 || s > 255)
        throw ParamError("s must be in [2, 255]");
    if (v < 1 || v >= s)
        throw ParamError("v must satisfy 0 < v < s");
    if (n < 2 || n > 255)
        throw ParamError("n must be in [2, 255]");
    if (k < 1 || k >= n)
        throw ParamError("k must satisfy 0 < k < n");
    if (m < 2 || m > 65535)
        throw ParamError("m must be in [2, 65535]");
    if (L < 1 || L > 65535)
        throw ParamError("L must be in [1, 65535]");
    if (f < 1 || f >= m || f > 255)
        throw ParamError("f must satisfy 1 <= f < m (and f <= 255)");
    if (b == 1 && f != 1)
        throw ParamError("q = 2 admits only f = 1 (no all-nonzero full-rank wider matrix)");
    if (target_weight != 0) {
        if (target_weight < m - f || target_weight > m)
            throw ParamError("target weight must lie in [m-f, m]");
        if (b == 1 && target_weight == m)
            throw ParamError("full weight is unattainable at q = 2");
    }
}

std::array<std::uint8_t, SchemeParams::kHeaderSize> SchemeParams::header() const {
    validate();
    std::array<std::uint8_t, kHeaderSize> h{};
    std::copy(kMagic.begin(), kMagic.end(), h.begin());
    h[6] = static_cast<std::uint8_t>((kVersion << 4) | b);
    h[7] = static_cast<std::uint8_t>(s);
    h[8] = static_cast<std::uint8_t>(v);
    h[9] = static_cast<std::uint8_t>(n);
    h[10] = static_cast<std::uint8_t>(k);
    h[11] = static_cast<std::uint8_t>(f);
    h[12] = static_cast<std::uint8_t>(m);
    h[13] = static_cast<std::uint8_t>(m >> 8);
    h[14] = static_cast<std::uint8_t>(L);
    h[15] = static_cast<std::uint8_t>(L >> 8);
    return h;
}

SchemeParams SchemeParams::from_header(ByteReader& in) {
    auto magic = in.take(kMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin()))
        throw SerialError("bad magic");
    const std::uint8_t vb = in.u8();
    if ((vb >> 4) != kVersion)
        throw SerialError("unsupported format version");
    SchemeParams p;
    p.b = vb & 0x0F;
    p.s = in.u8();
    p.v = in.u8();
    p.n = in.u8();
    p.k = in.u8();
    p.f = in.u8();
    p.m = in.u16le();
    p.L = in.u16le();
    try {
        p.validate();
    } catch (const ParamError& e) {
        throw SerialError(std::string("invalid parameters: ") + e.what());
    }
    return p;
}

std::uint64_t SchemeParams::hash() const {
    std::uint64_t h = 14695981039346656037ull;
    for (std::uint8_t byte : header()) {
        h ^= byte;
        h *= 1099511628211ull;
    }
    return h;
}

TowerPtr canonical_tower(const SchemeParams& params) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, TowerPtr> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(params.b, params.s);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, make_tower(params.b, params.s, /*seed=*/0)).first;
    return it->second;
}

// ---- Database ----

Database Database::random(const SchemeParams& params, Rng& rng) {
    params.validate();
    return {MatFq::random(canonical_tower(params), static_cast<std::size_t>(params.L),
                          static_cast<std::size_t>(params.m) *
                              static_cast<std::size_t>(params.delta()),
                          rng)};
}

MatFq Database::file(const SchemeParams& params, int j) const {
    if (j < 0 || j >= params.m)
        throw ParamError("file index out of range");
    const auto d = static_cast<std::size_t>(params.delta());
    return x.col_range(static_cast<std::size_t>(j) * d, d);
}

// ---- secret plans ----

SecretPlan build_secret_plan(const SchemeParams& params, std::span<const int> j_set, Rng& rng) {
    return plan_impl(params, j_set, nullptr, rng);
}

SecretPlan build_secret_plan_with_beta(const SchemeParams& params, std::span<const int> j_set,
                                       std::span<const Fq> beta, Rng& rng) {
    std::vector<Fq> fixed(beta.begin(), beta.end());
    return plan_impl(params, j_set, &fixed, rng);
}

// ---- queries ----

QueryBundle gen_query(const SchemeParams& params, std::span<const Fq> secret_row, Rng& rng) {
    params.validate();
    if (static_cast<int>(secret_row.size()) != params.m)
        throw DimError("secret row must have length m");
    for (Fq c : secret_row)
        if (c >= params.q())
            throw ParamError("secret row entry out of field range");

    const TowerPtr tower = canonical_tower(params);
    const auto md = static_cast<std::size_t>(params.m) * static_cast<std::size_t>(params.delta());
    const auto nk = static_cast<std::size_t>(params.n - params.k);
    const auto d = static_cast<std::size_t>(params.delta());

    LinearCode code = LinearCode::sample(tower, params.n, params.k, rng);
    BasisGamma basis = BasisGamma::sample(tower, params.v, rng);

    MatFqs dmat =
        code.encode_rows(MatFqs::random(tower, md, static_cast<std::size_t>(params.k), rng));

    MatFqs e0(tower, md, nk);
    for (std::size_t r = 0; r < md; ++r)
        for (std::size_t c = 0; c < nk; ++c)
            basis.random_in_v(rng, e0.at(r, c));
    MatFqs emat = code.phi_complement(e0);

    MatFqs delta0(tower, d, nk);
    std::optional<MatFq> t_inv;
    do {
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < nk; ++c)
                basis.random_in_w(rng, delta0.at(r, c));
        t_inv = flatten_w(delta0, basis).try_inverse();
    } while (!t_inv);
    MatFqs delta = code.phi_complement(delta0);

    std::size_t distinct = 0;
    MatFqs q = dmat + emat + kron_blocks(secret_row, delta, &distinct);
    return QueryBundle{
        QuerySecret{std::move(code), std::move(basis), std::move(delta0), *std::move(t_inv),
                    std::vector<Fq>(secret_row.begin(), secret_row.end())},
        QueryMatrix{std::move(q)}, distinct};
}

QueryBundle gen_query_original(const SchemeParams& params, int i, Rng& rng) {
    if (i < 0 || i >= params.m)
        throw ParamError("file index out of range");
    std::vector<Fq> e(static_cast<std::size_t>(params.m), 0);
    e[static_cast<std::size_t>(i)] = 1;
    return gen_query(params, e, rng);
}

// ---- server / decode / recover ----

ResponseMatrix server_respond(const SchemeParams& params, const Database& db,
                              const QueryMatrix& query) {
    const auto md = static_cast<std::size_t>(params.m) * static_cast<std::size_t>(params.delta());
    if (db.x.rows() != static_cast<std::size_t>(params.L) || db.x.cols() != md)
        throw DimError("database dimensions disagree with params");
    if (query.q.rows() != md || query.q.cols() != static_cast<std::size_t>(params.n))
        throw DimError("query dimensions disagree with params");
    return {db.x * query.q};
}

MatFq decode_response(const SchemeParams& params, const QuerySecret& secret,
                      const ResponseMatrix& response) {
    if (response.a.rows() != static_cast<std::size_t>(params.L) ||
        response.a.cols() != static_cast<std::size_t>(params.n))
        throw DimError("response dimensions disagree with params");
    auto dec = secret.code.erasure_decode_rows(response.a);
    if (!secret.code.errors_supported(dec.errors))
        throw DecodeError("response error support leaks into the information set");
    MatFqs on_complement = dec.errors.select_cols(secret.code.complement());
    MatFq z = flatten_w(on_complement, secret.basis);
    return z * secret.t_inv;
}

std::vector<MatFq> recover_files(const SchemeParams& params, const SecretPlan& plan,
                                 const std::vector<MatFq>& combos) {
    const auto f = static_cast<std::size_t>(params.f);
    if (combos.size() != f + 1)
        throw DimError("expected f+1 decoded combinations");
    const TowerPtr tower = canonical_tower(params);
    const auto d = static_cast<std::size_t>(params.delta());
    for (const auto& c : combos)
        if (c.rows() != static_cast<std::size_t>(params.L) || c.cols() != d)
            throw DimError("combination dimensions disagree with params");
    // stack Mtilde over the unit row (0,...,0,1); the plan guarantees the
    // left f x f block of Mtilde is invertible, hence so is this matrix
    MatFq nmat(tower, f + 1, f + 1);
    for (std::size_t r = 0; r < f; ++r)
        for (std::size_t c = 0; c <= f; ++c)
            nmat.set(r, c, plan.m_tilde.at(r, c));
    nmat.set(f, f, 1);
    MatFq ninv = nmat.inverse();
    std::vector<MatFq> files;
    files.reserve(f);
    for (std::size_t t = 0; t < f; ++t) {
        MatFq acc(tower, static_cast<std::size_t>(params.L), d);
        for (std::size_t r = 0; r <= f; ++r)
            acc.add_scaled(ninv.at(t, r), combos[r]);
        files.push_back(std::move(acc));
    }
    return files;
}

// ---- batched retrieval ----

namespace {

BatchResult batch_impl(const SchemeParams& params, SecretPlan plan, Rng& rng,
                       const RespondFn& respond, const MatFq* reused_beta_combo) {
    const auto f = static_cast<std::size_t>(params.f);
    std::vector<MatFq> combos;
    combos.reserve(f + 1);
    for (std::size_t i = 0; i < f; ++i) {
        QueryBundle bundle = gen_query(params, plan.rows.row(i), rng);
        combos.push_back(decode_response(params, bundle.secret, respond(bundle.query)));
    }
    if (reused_beta_combo) {
        combos.push_back(*reused_beta_combo);
    } else {
        QueryBundle bundle = gen_query(params, plan.rows.row(f), rng);
        combos.push_back(decode_response(params, bundle.secret, respond(bundle.query)));
    }
    std::vector<MatFq> files = recover_files(params, plan, combos);
    return BatchResult{std::move(files), std::move(plan), std::move(combos.back())};
}

} // namespace

BatchResult retrieve_batch(const SchemeParams& params, std::span<const int> j_set, Rng& rng,
                           const RespondFn& respond) {
    return batch_impl(params, build_secret_plan(params, j_set, rng), rng, respond, nullptr);
}

BatchResult retrieve_batch_reusing(const SchemeParams& params, std::span<const int> j_set,
                                   Rng& rng, const RespondFn& respond, std::span<const Fq> beta,
                                   const MatFq& beta_combo) {
    return batch_impl(params, build_secret_plan_with_beta(params, j_set, beta, rng), rng,
                      respond, &beta_combo);
}

// ---- serialized payloads ----

namespace {

Bytes with_header(const SchemeParams& params) {
    auto h = params.header();
    return Bytes(h.begin(), h.end());
}

ByteReader open_payload(std::span<const std::uint8_t> data, SchemeParams& params) {
    ByteReader rd(data);
    params = SchemeParams::from_header(rd);
    return rd;
}

} // namespace

Bytes database_to_bytes(const SchemeParams& params, const Database& db) {
    Bytes out = with_header(params);
    db.x.serialize(out);
    return out;
}

std::pair<SchemeParams, Database> database_from_bytes(std::span<const std::uint8_t> data) {
    SchemeParams params;
    ByteReader rd = open_payload(data, params);
    MatFq x = MatFq::parse(canonical_tower(params), rd);
    if (rd.remaining() != 0)
        throw SerialError("trailing bytes after database payload");
    if (x.rows() != static_cast<std::size_t>(params.L) ||
        x.cols() != static_cast<std::size_t>(params.m) * static_cast<std::size_t>(params.delta()))
        throw SerialError("database dimensions disagree with header");
    return {params, Database{std::move(x)}};
}

Bytes query_to_bytes(const SchemeParams& params, const QueryMatrix& query) {
    Bytes out = with_header(params);
    query.q.serialize(out);
    return out;
}

std::pair<SchemeParams, QueryMatrix> query_from_bytes(std::span<const std::uint8_t> data) {
    SchemeParams params;
    ByteReader rd = open_payload(data, params);
    MatFqs q = MatFqs::parse(canonical_tower(params), rd);
    if (rd.remaining() != 0)
        throw SerialError("trailing bytes after query payload");
    if (q.rows() != static_cast<std::size_t>(params.m) * static_cast<std::size_t>(params.delta()) ||
        q.cols() != static_cast<std::size_t>(params.n))
        throw SerialError("query dimensions disagree with header");
    return {params, QueryMatrix{std::move(q)}};
}

Bytes response_to_bytes(const SchemeParams& params, const ResponseMatrix& response) {
    Bytes out = with_header(params);
    response.a.serialize(out);
    return out;
}

std::pair<SchemeParams, ResponseMatrix> response_from_bytes(std::span<const std::uint8_t> data) {
    SchemeParams params;
    ByteReader rd = open_payload(data, params);
    MatFqs a = MatFqs::parse(canonical_tower(params), rd);
    if (rd.remaining() != 0)
        throw SerialError("trailing bytes after response payload");
    if (a.rows() != static_cast<std::size_t>(params.L) ||
        a.cols() != static_cast<std::size_t>(params.n))
        throw SerialError("response dimensions disagree with header");
    return {params, ResponseMatrix{std::move(a)}};
}

} // namespace cbpir
