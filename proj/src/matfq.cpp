#include "cbpir/matfq.hpp"

#include <algorithm>
#include <unordered_map>

namespace cbpir {

namespace {

void check_same_tower(const TowerPtr& a, const TowerPtr& c) {
    if (!a || !c || !a->same_as(*c))
        throw ParamError("matrices from different towers");
}

constexpr std::size_t kMaxEntries = std::size_t{1} << 32;

std::pair<std::size_t, std::size_t> parse_dims(ByteReader& in) {
    const std::uint64_t rows = in.u64le();
    const std::uint64_t cols = in.u64le();
    if (rows > kMaxEntries || cols > kMaxEntries || (rows != 0 && cols > kMaxEntries / rows))
        throw SerialError("matrix dimensions too large");
    return {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
}

} // namespace

// ---- MatFq ----

MatFq::MatFq(TowerPtr tower, std::size_t rows, std::size_t cols)
    : tower_(std::move(tower)), rows_(rows), cols_(cols), data_(rows * cols, 0) {}

MatFq MatFq::identity(TowerPtr tower, std::size_t n) {
    MatFq m(std::move(tower), n, n);
    for (std::size_t i = 0; i < n; ++i)
        m.set(i, i, 1);
    return m;
}

MatFq MatFq::random(TowerPtr tower, std::size_t rows, std::size_t cols, Rng& rng) {
    MatFq m(std::move(tower), rows, cols);
    const std::uint32_t q = m.tower_->q();
    for (auto& v : m.data_)
        v = rng.below(q);
    return m;
}

MatFq MatFq::random_invertible(TowerPtr tower, std::size_t n, Rng& rng) {
    for (;;) {
        MatFq m = random(tower, n, n, rng);
        if (m.try_inverse())
            return m;
    }
}

MatFq MatFq::operator+(const MatFq& other) const {
    check_same_tower(tower_, other.tower_);
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw DimError("add: shape mismatch");
    MatFq out(tower_, rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i)
        out.data_[i] = data_[i] ^ other.data_[i];
    return out;
}

MatFq MatFq::operator*(const MatFq& other) const {
    check_same_tower(tower_, other.tower_);
    if (cols_ != other.rows_)
        throw DimError("mul: inner dimension mismatch");
    MatFq out(tower_, rows_, other.cols_);
    const FieldTower& tw = *tower_;
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t k = 0; k < cols_; ++k) {
            const Fq a = at(r, k);
            if (a == 0)
                continue;
            const Fq* brow = &other.data_[k * other.cols_];
            Fq* orow = &out.data_[r * other.cols_];
            for (std::size_t c = 0; c < other.cols_; ++c)
                orow[c] ^= tw.fq_mul(a, brow[c]);
        }
    return out;
}

bool MatFq::operator==(const MatFq& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_ &&
           tower_ && other.tower_ && tower_->same_as(*other.tower_);
}

void MatFq::add_scaled(Fq c, const MatFq& other) {
    check_same_tower(tower_, other.tower_);
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw DimError("add_scaled: shape mismatch");
    if (c == 0)
        return;
    const FieldTower& tw = *tower_;
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] ^= tw.fq_mul(c, other.data_[i]);
}

MatFq MatFq::transpose() const {
    MatFq out(tower_, cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            out.set(c, r, at(r, c));
    return out;
}

MatFq MatFq::col_range(std::size_t c0, std::size_t width) const {
    if (c0 + width > cols_)
        throw DimError("col_range out of bounds");
    MatFq out(tower_, rows_, width);
    for (std::size_t r = 0; r < rows_; ++r)
        std::copy_n(&data_[r * cols_ + c0], width, &out.data_[r * width]);
    return out;
}

MatFq MatFq::drop_row_blocks(std::span<const int> blocks, std::size_t block_rows) const {
    std::vector<bool> drop(rows_, false);
    for (int j : blocks) {
        const std::size_t r0 = static_cast<std::size_t>(j) * block_rows;
        if (j < 0 || r0 + block_rows > rows_)
            throw DimError("drop_row_blocks: block out of range");
        for (std::size_t r = r0; r < r0 + block_rows; ++r)
            drop[r] = true;
    }
    const auto kept = static_cast<std::size_t>(std::count(drop.begin(), drop.end(), false));
    MatFq out(tower_, kept, cols_);
    std::size_t w = 0;
    for (std::size_t r = 0; r < rows_; ++r)
        if (!drop[r])
            std::copy_n(data_.data() + r * cols_, cols_, out.data_.data() + w++ * cols_);
    return out;
}

namespace {

// rank over F_2 on rows packed 64 columns per word
int rank_f2_packed(const MatFq& a, std::uint64_t* ops) {
    const std::size_t rows = a.rows(), cols = a.cols();
    const std::size_t words = (cols + 63) / 64;
    std::vector<std::uint64_t> m(rows * words, 0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (a.at(r, c))
                m[r * words + (c >> 6)] |= std::uint64_t{1} << (c & 63);
    int rank = 0;
    std::size_t pr = 0;
    for (std::size_t col = 0; col < cols && pr < rows; ++col) {
        const std::size_t wi = col >> 6;
        const std::uint64_t bit = std::uint64_t{1} << (col & 63);
        std::size_t piv = pr;
        while (piv < rows && !(m[piv * words + wi] & bit))
            ++piv;
        if (piv == rows)
            continue;
        if (piv != pr)
            for (std::size_t w = wi; w < words; ++w)
                std::swap(m[piv * words + w], m[pr * words + w]);
        for (std::size_t r = pr + 1; r < rows; ++r) {
            if (!(m[r * words + wi] & bit))
                continue;
            for (std::size_t w = wi; w < words; ++w)
                m[r * words + w] ^= m[pr * words + w];
            if (ops)
                *ops += cols - col;
        }
        ++rank;
        ++pr;
    }
    return rank;
}

} // namespace

int MatFq::rank(std::uint64_t* ops) const {
    if (rows_ == 0 || cols_ == 0)
        return 0;
    if (tower_->b() == 1)
        return rank_f2_packed(*this, ops);
    std::vector<Fq> m = data_;
    const FieldTower& tw = *tower_;
    int rank = 0;
    std::size_t pr = 0;
    for (std::size_t col = 0; col < cols_ && pr < rows_; ++col) {
        std::size_t piv = pr;
        while (piv < rows_ && m[piv * cols_ + col] == 0)
            ++piv;
        if (piv == rows_)
            continue;
        if (piv != pr)
            for (std::size_t c = col; c < cols_; ++c)
                std::swap(m[piv * cols_ + c], m[pr * cols_ + c]);
        const Fq pinv = tw.fq_inv(m[pr * cols_ + col]);
        for (std::size_t c = col; c < cols_; ++c)
            m[pr * cols_ + c] = tw.fq_mul(pinv, m[pr * cols_ + c]);
        for (std::size_t r = pr + 1; r < rows_; ++r) {
            const Fq factor = m[r * cols_ + col];
            if (factor == 0)
                continue;
            for (std::size_t c = col; c < cols_; ++c)
                m[r * cols_ + c] ^= tw.fq_mul(factor, m[pr * cols_ + c]);
            if (ops)
                *ops += cols_ - col;
        }
        ++rank;
        ++pr;
    }
    return rank;
}

std::optional<MatFq> MatFq::try_inverse() const {
    if (rows_ != cols_)
        throw DimError("inverse of non-square matrix");
    MatFq out = *this;
    if (!invert_small_fq(*tower_, out.data_, static_cast<int>(rows_)))
        return std::nullopt;
    return out;
}

MatFq MatFq::inverse() const {
    auto inv = try_inverse();
    if (!inv)
        throw SingularMatrixError("matrix not invertible over F_q");
    return *std::move(inv);
}

void MatFq::serialize(Bytes& out) const {
    put_u64le(out, rows_);
    put_u64le(out, cols_);
    BitWriter bw(out);
    const int b = tower_->b();
    for (Fq v : data_)
        bw.put(v, b);
}

MatFq MatFq::parse(TowerPtr tower, ByteReader& in) {
    const auto [rows, cols] = parse_dims(in);
    const int b = tower->b();
    MatFq m(std::move(tower), rows, cols);
    const std::size_t nbits = rows * cols * static_cast<std::size_t>(b);
    BitReader br(in.take((nbits + 7) / 8));
    for (auto& v : m.data_)
        v = br.get(b);
    return m;
}

// ---- MatFqs ----

MatFqs::MatFqs(TowerPtr tower, std::size_t rows, std::size_t cols)
    : tower_(std::move(tower)), rows_(rows), cols_(cols),
      data_(rows * cols * static_cast<std::size_t>(tower_->s()), 0) {}

MatFqs MatFqs::random(TowerPtr tower, std::size_t rows, std::size_t cols, Rng& rng) {
    MatFqs m(std::move(tower), rows, cols);
    const std::uint32_t q = m.tower_->q();
    for (auto& v : m.data_)
        v = rng.below(q);
    return m;
}

MatFqs MatFqs::operator+(const MatFqs& other) const {
    check_same_tower(tower_, other.tower_);
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw DimError("add: shape mismatch");
    MatFqs out(tower_, rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i)
        out.data_[i] = data_[i] ^ other.data_[i];
    return out;
}

MatFqs MatFqs::operator*(const MatFqs& other) const {
    check_same_tower(tower_, other.tower_);
    if (cols_ != other.rows_)
        throw DimError("mul: inner dimension mismatch");
    MatFqs out(tower_, rows_, other.cols_);
    const FieldTower& tw = *tower_;
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t k = 0; k < cols_; ++k) {
            const auto a = at(r, k);
            if (FieldTower::is_zero(a))
                continue;
            for (std::size_t c = 0; c < other.cols_; ++c)
                tw.fqs_mul_acc(a, other.at(k, c), out.at(r, c));
        }
    return out;
}

bool MatFqs::operator==(const MatFqs& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_ &&
           tower_ && other.tower_ && tower_->same_as(*other.tower_);
}

MatFqs MatFqs::scaled(Fq c) const {
    MatFqs out(tower_, rows_, cols_);
    const FieldTower& tw = *tower_;
    for (std::size_t i = 0; i < data_.size(); ++i)
        out.data_[i] = tw.fq_mul(c, data_[i]);
    return out;
}

MatFqs MatFqs::transpose() const {
    MatFqs out(tower_, cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) {
            const auto src = at(r, c);
            std::copy(src.begin(), src.end(), out.at(c, r).begin());
        }
    return out;
}

MatFqs MatFqs::row_range(std::size_t r0, std::size_t nrows) const {
    if (r0 + nrows > rows_)
        throw DimError("row_range out of bounds");
    MatFqs out(tower_, nrows, cols_);
    const std::size_t stride = cols_ * static_cast<std::size_t>(s());
    std::copy_n(data_.data() + r0 * stride, nrows * stride, out.data_.begin());
    return out;
}

MatFqs MatFqs::select_cols(std::span<const int> idx) const {
    MatFqs out(tower_, rows_, idx.size());
    const auto ss = static_cast<std::size_t>(s());
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const int c = idx[j];
            if (c < 0 || static_cast<std::size_t>(c) >= cols_)
                throw DimError("select_cols index out of range");
            std::copy_n(data_.data() + (r * cols_ + static_cast<std::size_t>(c)) * ss, ss,
                        out.at(r, j).begin());
        }
    return out;
}

MatFq MatFqs::flatten_fq() const {
    MatFq out(tower_, rows_, cols_ * static_cast<std::size_t>(s()));
    if (rows_ > 0)
        std::copy(data_.begin(), data_.end(), out.row(0).begin());
    return out;
}

MatFq MatFqs::flatten_fq(const BasisGamma& basis) const {
    if (!basis.tower()->same_as(*tower_))
        throw ParamError("basis from a different tower");
    const auto ss = static_cast<std::size_t>(s());
    MatFq out(tower_, rows_, cols_ * ss);
    for (std::size_t r = 0; r < rows_; ++r) {
        auto orow = out.row(r);
        for (std::size_t c = 0; c < cols_; ++c)
            basis.to_coords(at(r, c), orow.subspan(c * ss, ss));
    }
    return out;
}

std::optional<MatFqs> MatFqs::try_inverse() const {
    if (rows_ != cols_)
        throw DimError("inverse of non-square matrix");
    const std::size_t n = rows_;
    const FieldTower& tw = *tower_;
    const auto ss = static_cast<std::size_t>(s());
    MatFqs a = *this;
    MatFqs inv(tower_, n, n);
    for (std::size_t i = 0; i < n; ++i)
        tw.fqs_one(inv.at(i, i));
    std::vector<Fq> pinv(ss), factor(ss), tmp(ss);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && FieldTower::is_zero(a.at(piv, col)))
            ++piv;
        if (piv == n)
            return std::nullopt;
        if (piv != col)
            for (std::size_t c = 0; c < n; ++c) {
                std::swap_ranges(a.at(piv, c).begin(), a.at(piv, c).end(), a.at(col, c).begin());
                std::swap_ranges(inv.at(piv, c).begin(), inv.at(piv, c).end(),
                                 inv.at(col, c).begin());
            }
        tw.fqs_inv(a.at(col, col), pinv);
        for (std::size_t c = 0; c < n; ++c) {
            tw.fqs_mul(pinv, a.at(col, c), a.at(col, c));
            tw.fqs_mul(pinv, inv.at(col, c), inv.at(col, c));
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col)
                continue;
            std::copy_n(a.at(r, col).begin(), ss, factor.begin());
            if (FieldTower::is_zero(factor))
                continue;
            for (std::size_t c = 0; c < n; ++c) {
                tw.fqs_mul(factor, a.at(col, c), tmp);
                tw.fqs_add(a.at(r, c), tmp, a.at(r, c));
                tw.fqs_mul(factor, inv.at(col, c), tmp);
                tw.fqs_add(inv.at(r, c), tmp, inv.at(r, c));
            }
        }
    }
    return inv;
}

MatFqs MatFqs::inverse() const {
    auto inv = try_inverse();
    if (!inv)
        throw SingularMatrixError("matrix not invertible over F_{q^s}");
    return *std::move(inv);
}

void MatFqs::serialize(Bytes& out) const {
    put_u64le(out, rows_);
    put_u64le(out, cols_);
    const int b = tower_->b();
    const auto ss = static_cast<std::size_t>(s());
    for (std::size_t e = 0; e < rows_ * cols_; ++e) {
        BitWriter bw(out); // each element vector padded to a whole byte
        for (std::size_t i = 0; i < ss; ++i)
            bw.put(data_[e * ss + i], b);
    }
}

MatFqs MatFqs::parse(TowerPtr tower, ByteReader& in) {
    const auto [rows, cols] = parse_dims(in);
    const int b = tower->b();
    const auto ss = static_cast<std::size_t>(tower->s());
    const std::size_t elem_bytes = (ss * static_cast<std::size_t>(b) + 7) / 8;
    MatFqs m(std::move(tower), rows, cols);
    for (std::size_t e = 0; e < rows * cols; ++e) {
        BitReader br(in.take(elem_bytes));
        for (std::size_t i = 0; i < ss; ++i)
            m.data_[e * ss + i] = br.get(b);
    }
    return m;
}

MatFqs operator*(const MatFq& a, const MatFqs& c) {
    if (!a.tower() || !c.tower() || !a.tower()->same_as(*c.tower()))
        throw ParamError("matrices from different towers");
    if (a.cols() != c.rows())
        throw DimError("mul: inner dimension mismatch");
    MatFqs out(c.tower(), a.rows(), c.cols());
    const FieldTower& tw = *c.tower();
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const Fq scalar = a.at(r, k);
            if (scalar == 0)
                continue;
            for (std::size_t cc = 0; cc < c.cols(); ++cc)
                tw.fqs_scale_acc(scalar, c.at(k, cc), out.at(r, cc));
        }
    return out;
}

MatFqs kron_blocks(std::span<const Fq> w, const MatFqs& delta, std::size_t* distinct_scalars) {
    const std::size_t m = w.size();
    const std::size_t br = delta.rows();
    MatFqs out(delta.tower(), m * br, delta.cols());
    std::unordered_map<Fq, MatFqs> memo;
    for (std::size_t j = 0; j < m; ++j) {
        const Fq c = w[j];
        if (c == 0)
            continue;
        auto it = memo.find(c);
        if (it == memo.end())
            it = memo.emplace(c, delta.scaled(c)).first;
        const MatFqs& block = it->second;
        for (std::size_t r = 0; r < br; ++r)
            for (std::size_t cc = 0; cc < delta.cols(); ++cc) {
                const auto src = block.at(r, cc);
                std::copy(src.begin(), src.end(), out.at(j * br + r, cc).begin());
            }
    }
    if (distinct_scalars)
        *distinct_scalars = memo.size();
    return out;
}

} // namespace cbpir
