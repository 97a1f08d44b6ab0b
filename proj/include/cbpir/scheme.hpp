#pragma once

#include <array>
#include <functional>

#include "cbpir/lincode.hpp"

namespace cbpir {

// Protocol parameters. q = 2^b; files are L x delta matrices over F_q with
// delta = (n-k)(s-v); a batch retrieves f of the m files with f+1 queries.
struct SchemeParams {
    int b = 0;
    int s = 0;
    int v = 0;
    int n = 0;
    int k = 0;
    int m = 0;
    int L = 0;
    int f = 0;
    // Secret rows are resampled until wt >= target_weight. 0 selects the
    // default: full weight m when q > 2, m-1 when q = 2 (the maximum
    // attainable there, matching the binary single-file construction).
    int target_weight = 0;

    int delta() const { return (n - k) * (s - v); }
    int ns() const { return n * s; }
    std::uint32_t q() const { return 1u << b; }
    int effective_weight_target() const {
        if (target_weight != 0)
            return target_weight;
        return b == 1 ? m - 1 : m;
    }

    void validate() const; // throws ParamError

    // 16-byte file/frame header: magic "CBPIR\0", then version|b packed in
    // one byte (version in the high nibble), s, v, n, k, f as single bytes,
    // m and L as 16-bit little-endian.
    static constexpr std::size_t kHeaderSize = 16;
    static constexpr std::uint8_t kVersion = 1;
    std::array<std::uint8_t, kHeaderSize> header() const;
    static SchemeParams from_header(ByteReader& in); // throws SerialError
    std::uint64_t hash() const;                      // FNV-1a over the header

    bool operator==(const SchemeParams& o) const {
        return b == o.b && s == o.s && v == o.v && n == o.n && k == o.k && m == o.m &&
               L == o.L && f == o.f;
    }
};

// The field for given params is a public system parameter: both sides derive
// it deterministically from (b, s) so serialized matrices interoperate.
TowerPtr canonical_tower(const SchemeParams& params);

struct Database {
    MatFq x; // L x m*delta; file j occupies columns [j*delta, (j+1)*delta)

    static Database random(const SchemeParams& params, Rng& rng);
    MatFq file(const SchemeParams& params, int j) const; // 0-based
};

// The client's combining secret for one batch: row i (i < f) of `rows` is
// m_{i+1} = sum_t Mtilde[i][t] e^{j_t} + Mtilde[i][f] beta; row f is beta.
struct SecretPlan {
    std::vector<int> j_set; // f distinct 0-based file indices, caller order
    MatFq m_tilde;          // f x (f+1), all entries nonzero, left f x f block invertible
    std::vector<Fq> beta;   // length m, all entries nonzero
    MatFq rows;             // (f+1) x m
};

SecretPlan build_secret_plan(const SchemeParams& params, std::span<const int> j_set, Rng& rng);
// Same but with beta fixed (for batches that reuse a previous beta response).
SecretPlan build_secret_plan_with_beta(const SchemeParams& params, std::span<const int> j_set,
                                       std::span<const Fq> beta, Rng& rng);

// Client-side secret of a single query; never leaves the client.
struct QuerySecret {
    LinearCode code;
    BasisGamma basis;
    MatFqs delta0;             // delta x (n-k), entries in W
    MatFq t_inv;               // inverse of the delta x delta flattening of delta0
    std::vector<Fq> secret_row; // the combining row w this query encodes
};

struct QueryMatrix {
    MatFqs q; // m*delta x n

    bool operator==(const QueryMatrix&) const = default;
};

struct ResponseMatrix {
    MatFqs a; // L x n

    bool operator==(const ResponseMatrix&) const = default;
};

struct QueryBundle {
    QuerySecret secret;
    QueryMatrix query;
    // scalar multiples of Delta actually computed; at most min(wt, q-1)
    std::size_t distinct_scalars = 0;
};

// Q = D + E + Delta kron secret_row (D: rows from C; E = phi(E0), E0 over V;
// Delta = phi(Delta0), Delta0 over W with invertible flattening T).
QueryBundle gen_query(const SchemeParams& params, std::span<const Fq> secret_row, Rng& rng);
// The single-index query of the unmodified scheme: secret_row = e^i.
QueryBundle gen_query_original(const SchemeParams& params, int i, Rng& rng);

// A = X * Q; the server is stateless beyond the database.
ResponseMatrix server_respond(const SchemeParams& params, const Database& db,
                              const QueryMatrix& query);

// Recovers sum_j w_j X^j (L x delta) from the response: erasure-decode, take
// the error parts, keep W-components on the complement columns, un-mix by
// T^-1. Throws DecodeError if the error support leaks outside the complement.
MatFq decode_response(const SchemeParams& params, const QuerySecret& secret,
                      const ResponseMatrix& response);

// Solves the (f+1)-dimensional combining system; combos[i] must be the
// decoded result for rows[i] of the plan. Returns the f requested files.
std::vector<MatFq> recover_files(const SchemeParams& params, const SecretPlan& plan,
                                 const std::vector<MatFq>& combos);

using RespondFn = std::function<ResponseMatrix(const QueryMatrix&)>;

struct BatchResult {
    std::vector<MatFq> files; // X^{j_1}, ..., X^{j_f}
    SecretPlan plan;
    MatFq beta_combo; // decoded beta-row combination, reusable next batch
};

// Full client flow: plan, f+1 queries through respond, decode, recover.
BatchResult retrieve_batch(const SchemeParams& params, std::span<const int> j_set, Rng& rng,
                           const RespondFn& respond);
// Reuses a stored beta combination: sends only f queries.
BatchResult retrieve_batch_reusing(const SchemeParams& params, std::span<const int> j_set,
                                   Rng& rng, const RespondFn& respond,
                                   std::span<const Fq> beta, const MatFq& beta_combo);

// ---- file/wire payloads: 16-byte header followed by one matrix ----

Bytes database_to_bytes(const SchemeParams& params, const Database& db);
std::pair<SchemeParams, Database> database_from_bytes(std::span<const std::uint8_t> data);
Bytes query_to_bytes(const SchemeParams& params, const QueryMatrix& query);
std::pair<SchemeParams, QueryMatrix> query_from_bytes(std::span<const std::uint8_t> data);
Bytes response_to_bytes(const SchemeParams& params, const ResponseMatrix& response);
std::pair<SchemeParams, ResponseMatrix> response_from_bytes(std::span<const std::uint8_t> data);

} // namespace cbpir
