#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace reread {

/// Dense row-major tensor of doubles. Only ranks 1 and 2 are used by the
/// models, but the shape is kept general so checkpoints round-trip any rank.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor vector(std::size_t n, double fill = 0.0) { return Tensor({n}, fill); }
    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        return Tensor({rows, cols}, fill);
    }
    /// Builds a matrix from nested rows; all rows must have equal length.
    static Tensor from_rows(const std::vector<std::vector<double>>& rows);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    /// Rank-2 accessors. A rank-1 tensor is viewed as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::span<double> row(std::size_t r);
    std::span<const double> row(std::size_t r) const;

    void fill(double value);
    bool all_finite() const;
    std::string shape_string() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// A trainable tensor together with its accumulated gradient.
struct Parameter {
    Tensor value;
    Tensor grad;

    Parameter() = default;
    explicit Parameter(Tensor init) : value(std::move(init)), grad(value.shape(), 0.0) {}

    void zero_grad() { grad.fill(0.0); }
};

struct NamedParameter {
    std::string name;
    Parameter* param;
};

using ParameterRefs = std::vector<NamedParameter>;

void zero_grads(const ParameterRefs& params);

// Dense ops with explicit backward passes.

Tensor matmul(const Tensor& a, const Tensor& b);

/// Accumulates dL/da and dL/db for out = a·b given dL/dout. Either output
/// may be null when that gradient is not wanted.
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& dout, Tensor* da, Tensor* db);

std::vector<double> softmax(std::span<const double> logits);

/// dL/dlogits given dL/dp for p = softmax(logits).
std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> dprobs);

inline constexpr double kProbabilityFloor = 1e-12;

/// -ln p[y] with p[y] clamped from below at 1e-12.
double cross_entropy(std::span<const double> probs, std::size_t label);

/// dCE/dp; zero where the clamp is active.
std::vector<double> cross_entropy_grad(std::span<const double> probs, std::size_t label);

/// d(-ln softmax(z)[y])/dz = p - onehot(y), given p = softmax(z). Agrees with
/// softmax_backward(p, cross_entropy_grad(p, y)) above the clamp floor and
/// keeps pulling below it, so a saturated wrong prediction can still recover.
std::vector<double> cross_entropy_logit_grad(std::span<const double> probs, std::size_t label);

/// Mean over positions of -[g ln s + (1-g) ln(1-s)] with s clamped to
/// [1e-12, 1-1e-12].
double binary_cross_entropy(std::span<const double> scores, std::span<const double> gold);

/// dBCE/ds; zero where the clamp is active.
std::vector<double> binary_cross_entropy_grad(std::span<const double> scores, std::span<const double> gold);

double sigmoid(double x);

}  // namespace reread
