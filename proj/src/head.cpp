#include "annmix/head.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace annmix {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

Eigen::Index ix(std::size_t n) { return static_cast<Eigen::Index>(n); }

}  // namespace

HeadView::HeadView(HeadShape shape, std::span<const double> values) : shape_(shape), values_(values) {
    if (values.size() != shape.size())
        throw std::invalid_argument("head parameter vector has " + std::to_string(values.size()) +
                                    " entries, shape needs " + std::to_string(shape.size()));
}

void HeadView::forward(std::span<const double> z, std::span<double> pre, std::span<double> out) const {
    const auto& s = shape_;
    if (z.size() != s.input)
        throw std::invalid_argument("input has dimension " + std::to_string(z.size()) + ", head expects " +
                                    std::to_string(s.input));
    const double* p = values_.data();
    ConstMatrixMap w1(p + s.w1_offset(), ix(s.hidden), ix(s.input));
    ConstVectorMap b1(p + s.b1_offset(), ix(s.hidden));
    ConstMatrixMap w2(p + s.w2_offset(), ix(s.output), ix(s.hidden));
    ConstVectorMap b2(p + s.b2_offset(), ix(s.output));
    ConstVectorMap zv(z.data(), ix(s.input));
    VectorMap prev(pre.data(), ix(s.hidden));
    VectorMap outv(out.data(), ix(s.output));
    prev.noalias() = w1 * zv + b1;
    outv.noalias() = w2 * prev.cwiseMax(0.0) + b2;
}

void HeadView::backward(std::span<const double> z, std::span<const double> pre, std::span<const double> grad_out,
                        std::span<double> grad) const {
    const auto& s = shape_;
    const double* p = values_.data();
    double* g = grad.data();
    ConstMatrixMap w2(p + s.w2_offset(), ix(s.output), ix(s.hidden));
    ConstVectorMap zv(z.data(), ix(s.input));
    ConstVectorMap prev(pre.data(), ix(s.hidden));
    ConstVectorMap go(grad_out.data(), ix(s.output));

    MatrixMap gw1(g + s.w1_offset(), ix(s.hidden), ix(s.input));
    VectorMap gb1(g + s.b1_offset(), ix(s.hidden));
    MatrixMap gw2(g + s.w2_offset(), ix(s.output), ix(s.hidden));
    VectorMap gb2(g + s.b2_offset(), ix(s.output));

    const Eigen::VectorXd act = prev.cwiseMax(0.0);
    gw2.noalias() += go * act.transpose();
    gb2 += go;
    Eigen::VectorXd gh = w2.transpose() * go;
    for (Eigen::Index i = 0; i < gh.size(); ++i)
        if (!(prev[i] > 0.0)) gh[i] = 0.0;
    gw1.noalias() += gh * zv.transpose();
    gb1 += gh;
}

HeadParams HeadParams::zeros(HeadShape shape) { return {shape, std::vector<double>(shape.size(), 0.0)}; }

HeadParams HeadParams::fan_in_uniform(HeadShape shape, Rng& rng) {
    HeadParams h = zeros(shape);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(shape.input));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
    for (std::size_t i = shape.w1_offset(); i < shape.w2_offset(); ++i) h.values[i] = bound1 * (2.0 * rng.uniform() - 1.0);
    for (std::size_t i = shape.w2_offset(); i < shape.size(); ++i) h.values[i] = bound2 * (2.0 * rng.uniform() - 1.0);
    return h;
}

std::vector<double> head_forward(const HeadView& head, std::span<const double> z) {
    std::vector<double> pre(head.shape().hidden);
    std::vector<double> out(head.shape().output);
    head.forward(z, pre, out);
    return out;
}

}  // namespace annmix
