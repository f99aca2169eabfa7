#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "annmix/rng.hpp"

namespace annmix {

// One hidden affine layer with a rectifier: out = W2 relu(W1 z + b1) + b2.
//
// Flattened parameter order (also the serialized order): W1 row-major
// (hidden x input), b1, W2 row-major (output x hidden), b2.
struct HeadShape {
    std::size_t input = 768;
    std::size_t hidden = 128;
    std::size_t output = 3;

    std::size_t w1_offset() const { return 0; }
    std::size_t b1_offset() const { return hidden * input; }
    std::size_t w2_offset() const { return b1_offset() + hidden; }
    std::size_t b2_offset() const { return w2_offset() + output * hidden; }
    std::size_t size() const { return b2_offset() + output; }

    bool operator==(const HeadShape&) const = default;
};

// Non-owning view of head parameters laid out as above.
class HeadView {
public:
    HeadView(HeadShape shape, std::span<const double> values);

    const HeadShape& shape() const { return shape_; }
    std::span<const double> values() const { return values_; }

    // `pre` receives the hidden pre-activations (size hidden), `out` the
    // head output (size output).
    void forward(std::span<const double> z, std::span<double> pre, std::span<double> out) const;

    // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(out) and the
    // pre-activations from forward(). The rectifier's subgradient at 0 is 0.
    void backward(std::span<const double> z, std::span<const double> pre, std::span<const double> grad_out,
                  std::span<double> grad) const;

private:
    HeadShape shape_;
    std::span<const double> values_;
};

struct HeadParams {
    HeadShape shape;
    std::vector<double> values;

    static HeadParams zeros(HeadShape shape);
    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer, biases included.
    static HeadParams fan_in_uniform(HeadShape shape, Rng& rng);

    HeadView view() const { return HeadView(shape, values); }
};

std::vector<double> head_forward(const HeadView& head, std::span<const double> z);

}  // namespace annmix
