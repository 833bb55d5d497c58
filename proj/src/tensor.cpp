#include "cesagan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cesagan/error.hpp"

CESAGAN_NAMESPACE_BEGIN
namespace ad {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

std::size_t shape_numel(const Shape& shape) noexcept {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream ss;
    ss << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) ss << (i ? "x" : "") << shape[i];
    ss << ']';
    return ss.str();
}

Tensor::Tensor(Shape shape, const std::vector<Real>& data, bool requires_grad)
    : Tensor(std::move(shape), Buffer(data.begin(), data.end()), requires_grad) {}

Tensor::Tensor(Shape shape, std::initializer_list<Real> data, bool requires_grad)
    : Tensor(std::move(shape), Buffer(data), requires_grad) {}

Tensor::Tensor(Shape shape, Buffer data, bool requires_grad)
    : s_(std::make_shared<TensorStorage>()) {
    if (shape_numel(shape) != data.size()) {
        throw ShapeMismatch("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                            shape_str(shape));
    }
    s_->shape = std::move(shape);
    s_->data = std::move(data);
    s_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), Real(0), requires_grad); }

Tensor Tensor::full(Shape shape, Real value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), Buffer(n, value), requires_grad);
}

Tensor Tensor::scalar(Real value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Real Tensor::item() const {
    if (numel() != 1) throw NotScalar("item() on tensor of shape " + shape_str(shape()));
    return s_->data[0];
}

std::span<Real> Tensor::grad_buffer() const {
    if (s_->grad.empty()) s_->grad.assign(s_->data.size(), Real(0));
    return s_->grad;
}

void Tensor::zero_grad() {
    if (s_) std::fill(s_->grad.begin(), s_->grad.end(), Real(0));
}

Tensor Tensor::detach() const { return Tensor(s_->shape, s_->data, false); }

Tensor Tensor::clone() const {
    Tensor t(s_->shape, s_->data, s_->requires_grad);
    t.s_->grad = s_->grad;
    return t;
}

void Tape::record(std::shared_ptr<TensorStorage> output, BackwardRule rule) {
    entries_.push_back(Entry{std::move(output), std::move(rule)});
}

bool Tape::contains(const Tensor& t) const noexcept {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const Entry& e) { return e.output.get() == t.storage(); });
}

void Tape::backward(const Tensor& loss) {
    if (loss.numel() != 1) throw NotScalar("backward() needs a scalar loss, got " + shape_str(loss.shape()));
    if (!contains(loss)) throw NoTape("loss was not produced on this tape");
    Tensor seed = loss;
    seed.grad_buffer()[0] += Real(1);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (it->output->grad.empty()) continue;
        it->rule(it->output->grad);
    }
}

Tape* active_tape() noexcept { return g_active_tape; }

TapeScope::TapeScope(Tape* tape) noexcept : previous_(g_active_tape) { g_active_tape = tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

void backward(const Tensor& loss) {
    Tape* tape = active_tape();
    if (tape == nullptr) throw NoTape("backward() called without an active tape");
    tape->backward(loss);
}

Tensor make_result(Shape shape, Buffer data, std::initializer_list<const Tensor*> inputs,
                   BackwardRule rule) {
    for (Real v : data) {
        if (!std::isfinite(v)) throw NonFiniteInput("operation produced a non-finite value");
    }
    bool needs_grad = false;
    for (const Tensor* in : inputs) needs_grad = needs_grad || (in && in->requires_grad());
    Tensor out(std::move(shape), std::move(data), needs_grad);
    if (needs_grad) {
        if (Tape* tape = active_tape()) tape->record(out.storage_ptr(), std::move(rule));
    }
    return out;
}

}  // namespace ad
CESAGAN_NAMESPACE_END
