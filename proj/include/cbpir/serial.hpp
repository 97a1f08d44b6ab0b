#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbpir/errors.hpp"

namespace cbpir {

using Bytes = std::vector<std::uint8_t>;

inline void put_u16le(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32le(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64le(Bytes& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u32be(Bytes& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

// Cursor over a byte buffer; every read is bounds-checked and throws
// SerialError on truncation.
class ByteReader {
  public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t pos() const { return pos_; }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    std::uint16_t u16le() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    std::uint32_t u32le() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i)
            v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 4;
        return v;
    }

    std::uint64_t u64le() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i)
            v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 8;
        return v;
    }

    std::uint32_t u32be() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v = (v << 8) | data_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 4;
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

  private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size())
            throw SerialError("truncated input");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

// Little-endian bit packing: bit 0 of a value lands in the least significant
// bit of the current byte. This is the on-disk / on-wire format for field
// elements (b bits each).
class BitWriter {
  public:
    explicit BitWriter(Bytes& out) : out_(out) {}

    void put(std::uint32_t value, int nbits) {
        for (int i = 0; i < nbits; ++i) {
            if (bit_ == 0)
                out_.push_back(0);
            if ((value >> i) & 1u)
                out_.back() |= static_cast<std::uint8_t>(1u << bit_);
            bit_ = (bit_ + 1) & 7;
        }
    }

    // zero-fill to the next byte boundary
    void pad_to_byte() { bit_ = 0; }

  private:
    Bytes& out_;
    int bit_ = 0;
};

class BitReader {
  public:
    explicit BitReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint32_t get(int nbits) {
        std::uint32_t v = 0;
        for (int i = 0; i < nbits; ++i) {
            const std::size_t byte = pos_ >> 3;
            if (byte >= data_.size())
                throw SerialError("truncated bit stream");
            if ((data_[byte] >> (pos_ & 7)) & 1u)
                v |= 1u << i;
            ++pos_;
        }
        return v;
    }

    void align_byte() { pos_ = (pos_ + 7u) & ~std::size_t{7}; }

    std::size_t bytes_consumed() const { return (pos_ + 7u) >> 3; }

  private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace cbpir
