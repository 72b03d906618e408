#pragma once

#include "error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace laspated {

// Dense row-major array with a runtime shape. Last index varies fastest.
template <typename T>
class NdArray {
public:
    using value_type = T;

    NdArray() = default;

    explicit NdArray(std::vector<std::size_t> shape, T fill = T{})
        : shape_(std::move(shape)), data_(count(shape_), fill) {}

    NdArray(std::initializer_list<std::size_t> shape, T fill = T{})
        : NdArray(std::vector<std::size_t>(shape), fill) {}

    [[nodiscard]] const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    [[nodiscard]] std::span<T> flat() noexcept { return data_; }
    [[nodiscard]] std::span<const T> flat() const noexcept { return data_; }
    [[nodiscard]] T* data() noexcept { return data_.data(); }
    [[nodiscard]] const T* data() const noexcept { return data_.data(); }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    template <typename... Idx>
    T& operator()(Idx... idx) noexcept { return data_[offset(idx...)]; }
    template <typename... Idx>
    const T& operator()(Idx... idx) const noexcept { return data_[offset(idx...)]; }

    template <typename... Idx>
    [[nodiscard]] std::size_t offset(Idx... idx) const noexcept {
        const std::array<std::size_t, sizeof...(Idx)> ix{static_cast<std::size_t>(idx)...};
        std::size_t off = 0;
        for (std::size_t a = 0; a < ix.size(); ++a) off = off * shape_[a] + ix[a];
        return off;
    }

    [[nodiscard]] bool same_shape(const NdArray& other) const noexcept { return shape_ == other.shape_; }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    friend bool operator==(const NdArray&, const NdArray&) = default;

private:
    static std::size_t count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

using Array = NdArray<double>;

inline void require_same_shape(const Array& a, const Array& b, const char* what) {
    if (!a.same_shape(b)) throw DataError(std::string(what) + ": shape mismatch");
}

inline double dot(const Array& a, const Array& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// a + s*b
inline Array axpy(const Array& a, double s, const Array& b) {
    require_same_shape(a, b, "axpy");
    Array out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b[i];
    return out;
}

// Mean absolute entrywise difference.
inline double average_rate_difference(const Array& a, const Array& b) {
    require_same_shape(a, b, "average_rate_difference");
    if (a.size() == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

} // namespace laspated
