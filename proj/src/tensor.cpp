#include "reread/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "reread/error.hpp"

namespace reread {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                             std::to_string(b) + ")");
    }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (product(shape_) != data_.size()) {
        throw DimensionError("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                             shape_string());
    }
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * cols);
    for (const auto& r : rows) {
        if (r.size() != cols) throw DimensionError("from_rows: ragged rows");
        data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({rows.size(), cols}, std::move(data));
}

std::size_t Tensor::rows() const {
    if (shape_.size() == 1) return 1;
    if (shape_.size() != 2) throw DimensionError("rows() on tensor of shape " + shape_string());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (shape_.size() == 1) return shape_[0];
    if (shape_.size() != 2) throw DimensionError("cols() on tensor of shape " + shape_string());
    return shape_[1];
}

std::span<double> Tensor::row(std::size_t r) {
    const std::size_t c = cols();
    return std::span<double>(data_).subspan(r * c, c);
}

std::span<const double> Tensor::row(std::size_t r) const {
    const std::size_t c = cols();
    return std::span<const double>(data_).subspan(r * c, c);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << 'x';
        os << shape_[i];
    }
    os << ']';
    return os.str();
}

void zero_grads(const ParameterRefs& params) {
    for (const auto& p : params) p.param->zero_grad();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw DimensionError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::matrix(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += aip * b(p, j);
        }
    }
    return out;
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& dout, Tensor* da, Tensor* db) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (dout.rows() != m || dout.cols() != n) {
        throw DimensionError("matmul_backward: upstream gradient has shape " + dout.shape_string());
    }
    if (da) {
        // da = dout · bᵀ
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += dout(i, j) * b(p, j);
                (*da)(i, p) += acc;
            }
    }
    if (db) {
        // db = aᵀ · dout
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
                const double aip = a(i, p);
                if (aip == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) (*db)(p, j) += aip * dout(i, j);
            }
    }
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw DimensionError("softmax of empty vector");
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> dprobs) {
    require_same_length(probs.size(), dprobs.size(), "softmax_backward");
    double dot = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) dot += probs[i] * dprobs[i];
    std::vector<double> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] * (dprobs[i] - dot);
    return out;
}

double cross_entropy(std::span<const double> probs, std::size_t label) {
    if (label >= probs.size()) {
        throw IndexError("class index " + std::to_string(label) + " out of range for " +
                         std::to_string(probs.size()) + " classes");
    }
    return -std::log(std::max(probs[label], kProbabilityFloor));
}

std::vector<double> cross_entropy_grad(std::span<const double> probs, std::size_t label) {
    if (label >= probs.size()) {
        throw IndexError("class index " + std::to_string(label) + " out of range for " +
                         std::to_string(probs.size()) + " classes");
    }
    std::vector<double> g(probs.size(), 0.0);
    if (probs[label] >= kProbabilityFloor) g[label] = -1.0 / probs[label];
    return g;
}

std::vector<double> cross_entropy_logit_grad(std::span<const double> probs, std::size_t label) {
    if (label >= probs.size()) throw IndexError("cross_entropy_logit_grad: class index out of range");
    std::vector<double> g(probs.begin(), probs.end());
    g[label] -= 1.0;
    return g;
}

double binary_cross_entropy(std::span<const double> scores, std::span<const double> gold) {
    require_same_length(scores.size(), gold.size(), "binary_cross_entropy");
    if (scores.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double s = std::clamp(scores[i], kProbabilityFloor, 1.0 - kProbabilityFloor);
        total -= gold[i] * std::log(s) + (1.0 - gold[i]) * std::log(1.0 - s);
    }
    return total / static_cast<double>(scores.size());
}

std::vector<double> binary_cross_entropy_grad(std::span<const double> scores, std::span<const double> gold) {
    require_same_length(scores.size(), gold.size(), "binary_cross_entropy_grad");
    std::vector<double> g(scores.size(), 0.0);
    const double n = static_cast<double>(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double s = scores[i];
        if (s < kProbabilityFloor || s > 1.0 - kProbabilityFloor) continue;
        g[i] = (-gold[i] / s + (1.0 - gold[i]) / (1.0 - s)) / n;
    }
    return g;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace reread
