#pragma once

#include "cesagan/config.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

CESAGAN_NAMESPACE_BEGIN

namespace ad {

using Shape = std::vector<std::size_t>;

/// Cache-line aligned allocation, so vectorized kernels see the same alignment on every run.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() noexcept = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

    template <typename U>
    friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept { return true; }
};

using Buffer = std::vector<Real, AlignedAllocator<Real>>;

std::size_t shape_numel(const Shape& shape) noexcept;
std::string shape_str(const Shape& shape);

struct TensorStorage {
    Shape shape;
    Buffer data;
    Buffer grad;  // empty until a gradient is first accumulated
    bool requires_grad = false;
};

/// Shared handle to a tensor. Copies alias the same storage; use clone() for a deep copy.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, Buffer data, bool requires_grad = false);
    Tensor(Shape shape, const std::vector<Real>& data, bool requires_grad = false);
    Tensor(Shape shape, std::initializer_list<Real> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, Real value, bool requires_grad = false);
    static Tensor scalar(Real value, bool requires_grad = false);

    bool defined() const noexcept { return static_cast<bool>(s_); }
    const Shape& shape() const { return s_->shape; }
    std::size_t rank() const { return s_->shape.size(); }
    std::size_t dim(std::size_t i) const { return s_->shape.at(i); }
    std::size_t numel() const { return s_->data.size(); }

    std::span<const Real> data() const { return s_->data; }
    std::span<Real> mutable_data() { return s_->data; }
    Real operator[](std::size_t i) const { return s_->data[i]; }
    Real item() const;

    bool requires_grad() const noexcept { return s_ && s_->requires_grad; }
    void set_requires_grad(bool v) { s_->requires_grad = v; }
    bool has_grad() const noexcept { return s_ && !s_->grad.empty(); }
    /// Empty span when no gradient has been accumulated yet.
    std::span<const Real> grad() const { return s_->grad; }
    /// Allocates a zeroed gradient buffer on first use.
    std::span<Real> grad_buffer() const;
    void zero_grad();

    Tensor detach() const;
    Tensor clone() const;

    const TensorStorage* storage() const noexcept { return s_.get(); }
    std::shared_ptr<TensorStorage> storage_ptr() const noexcept { return s_; }

private:
    std::shared_ptr<TensorStorage> s_;
};

using BackwardRule = std::function<void(std::span<const Real> out_grad)>;

/// Reverse-mode tape. Operations record themselves on the thread's active tape.
class Tape {
public:
    void record(std::shared_ptr<TensorStorage> output, BackwardRule rule);
    /// Seeds d(loss)/d(loss) = 1 and replays backward rules in reverse order.
    void backward(const Tensor& loss);
    void clear() noexcept { entries_.clear(); }
    std::size_t size() const noexcept { return entries_.size(); }
    bool contains(const Tensor& t) const noexcept;

private:
    struct Entry {
        std::shared_ptr<TensorStorage> output;
        BackwardRule rule;
    };
    std::vector<Entry> entries_;
};

Tape* active_tape() noexcept;

/// Installs `tape` as the active tape for this thread; nullptr suspends recording.
class TapeScope {
public:
    explicit TapeScope(Tape* tape) noexcept;
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* previous_;
};

/// Backward through the active tape. Throws NotScalar / NoTape.
void backward(const Tensor& loss);

/// Builds an op result, recording `rule` on the active tape when any input needs a gradient.
Tensor make_result(Shape shape, Buffer data, std::initializer_list<const Tensor*> inputs,
                   BackwardRule rule);

}  // namespace ad
CESAGAN_NAMESPACE_END
