#include "cbpir/lincode.hpp"

#include <algorithm>
#include <numeric>

namespace cbpir {

LinearCode::LinearCode(MatFqs gen, std::vector<int> info)
    : gen_(std::move(gen)), info_(std::move(info)) {
    const int nn = n(), kk = k();
    if (kk <= 0 || kk >= nn)
        throw ParamError("code requires 0 < k < n");
    if (static_cast<int>(info_.size()) != kk || !std::is_sorted(info_.begin(), info_.end()) ||
        std::adjacent_find(info_.begin(), info_.end()) != info_.end() || info_.front() < 0 ||
        info_.back() >= nn)
        throw ParamError("information set must be k distinct ascending indices in [n]");
    comp_.reserve(static_cast<std::size_t>(nn - kk));
    for (int c = 0, j = 0; c < nn; ++c) {
        if (j < kk && info_[static_cast<std::size_t>(j)] == c)
            ++j;
        else
            comp_.push_back(c);
    }
    info_inv_ = gen_.select_cols(info_).inverse(); // throws if I is not an information set
}

LinearCode LinearCode::sample(TowerPtr tower, int n, int k, Rng& rng) {
    if (k <= 0 || k >= n)
        throw ParamError("code requires 0 < k < n");
    // uniform k-subset by partial Fisher-Yates
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < k; ++i)
        std::swap(pool[static_cast<std::size_t>(i)],
                  pool[static_cast<std::size_t>(i) +
                       rng.below(static_cast<std::uint32_t>(n - i))]);
    std::vector<int> info(pool.begin(), pool.begin() + k);
    std::sort(info.begin(), info.end());

    const auto kk = static_cast<std::size_t>(k);
    MatFqs gi(tower, kk, kk);
    do {
        gi = MatFqs::random(tower, kk, kk, rng);
    } while (!gi.try_inverse());

    MatFqs gen = MatFqs::random(tower, kk, static_cast<std::size_t>(n), rng);
    for (std::size_t j = 0; j < kk; ++j)
        for (std::size_t r = 0; r < kk; ++r) {
            const auto src = gi.at(r, j);
            std::copy(src.begin(), src.end(),
                      gen.at(r, static_cast<std::size_t>(info[j])).begin());
        }
    return LinearCode(std::move(gen), std::move(info));
}

MatFqs LinearCode::encode_rows(const MatFqs& messages) const {
    return messages * gen_;
}

LinearCode::Decomposition LinearCode::erasure_decode_rows(const MatFqs& received) const {
    if (static_cast<int>(received.cols()) != n())
        throw DimError("decode: expected n columns");
    const MatFqs u = received.select_cols(info_) * info_inv_;
    MatFqs codewords = u * gen_;
    return {codewords, received + codewords}; // char 2: subtraction is addition
}

MatFqs LinearCode::phi_complement(const MatFqs& e0) const {
    if (static_cast<int>(e0.cols()) != n() - k())
        throw DimError("phi: expected n-k columns");
    MatFqs out(tower(), e0.rows(), static_cast<std::size_t>(n()));
    for (std::size_t r = 0; r < e0.rows(); ++r)
        for (std::size_t j = 0; j < comp_.size(); ++j) {
            const auto src = e0.at(r, j);
            std::copy(src.begin(), src.end(),
                      out.at(r, static_cast<std::size_t>(comp_[j])).begin());
        }
    return out;
}

bool LinearCode::errors_supported(const MatFqs& errors) const {
    for (std::size_t r = 0; r < errors.rows(); ++r)
        for (int c : info_)
            if (!FieldTower::is_zero(errors.at(r, static_cast<std::size_t>(c))))
                return false;
    return true;
}

void LinearCode::serialize(Bytes& out) const {
    tower()->serialize(out);
    put_u16le(out, static_cast<std::uint16_t>(n()));
    put_u16le(out, static_cast<std::uint16_t>(k()));
    for (int c : info_)
        put_u16le(out, static_cast<std::uint16_t>(c));
    gen_.serialize(out);
}

LinearCode LinearCode::parse(ByteReader& in) {
    auto tower = std::make_shared<const FieldTower>(FieldTower::parse(in));
    const int n = in.u16le();
    const int k = in.u16le();
    if (k <= 0 || k >= n)
        throw SerialError("bad code dimensions");
    std::vector<int> info(static_cast<std::size_t>(k));
    for (auto& c : info)
        c = in.u16le();
    MatFqs gen = MatFqs::parse(tower, in);
    if (static_cast<int>(gen.rows()) != k || static_cast<int>(gen.cols()) != n)
        throw SerialError("generator dimensions disagree with header");
    try {
        return LinearCode(std::move(gen), std::move(info));
    } catch (const Error& e) {
        throw SerialError(std::string("invalid code: ") + e.what());
    }
}

} // namespace cbpir
