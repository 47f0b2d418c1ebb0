#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "oncf/tensor.hpp"

namespace oncf {

// User and item embedding matrices. Row u of P is the embedding of user u;
// the one-hot lookup collapses to row selection.
struct EmbeddingTable {
    Tensor P;  // users x K
    Tensor Q;  // items x K

    std::size_t embeddingSize() const { return P.empty() ? 0 : P.extent(1); }
    std::size_t users() const { return P.empty() ? 0 : P.extent(0); }
    std::size_t items() const { return Q.empty() ? 0 : Q.extent(0); }
};

struct EmbeddingPair {
    std::span<const double> p;
    std::span<const double> q;
};

// Row selection with id validation; throws IndexError out of range.
EmbeddingPair lookup(const EmbeddingTable& table, std::int64_t u, std::int64_t i);

// Interaction map E = p qT, e(a,b) = p[a] * q[b]. Rank-1 by construction and
// its diagonal is the Hadamard product p (.) q.
Tensor outerProduct(std::span<const double> p, std::span<const double> q);

// dL/dp = gradE q, dL/dq = gradE^T p.
std::pair<Tensor, Tensor> outerProductBackward(const Tensor& gradE, std::span<const double> p,
                                               std::span<const double> q);

// One 2x2 stride-2 convolution layer. Layer 1 filters are (2, 2, C); deeper
// layers are (2, 2, Cin, Cout). One bias per feature map.
struct ConvLayerParams {
    Tensor filters;
    Tensor bias;

    std::size_t inChannels() const { return filters.rank() == 3 ? 1 : filters.extent(2); }
    std::size_t outChannels() const {
        return filters.rank() == 3 ? filters.extent(2) : filters.extent(3);
    }
};

// Forward pass over an (s, s) or (s, s, Cin) input, s even:
//
//   out(i,j,c) = ReLU( bias[c] + sum_{a,b in {0,1}} in(2i+a, 2j+b, .) . t(1-a, 1-b, ., c) )
//
// The filter is indexed with flipped offsets (1-a, 1-b); tests pin this
// orientation, so it is not interchangeable with plain cross-correlation.
// Output is ((s/2), (s/2), Cout); each layer halves the spatial extent.
Tensor convForward(const Tensor& input, const ConvLayerParams& params);

struct ConvGrads {
    Tensor input;
    Tensor filters;
    Tensor bias;
};

// Exact gradients of convForward. `output` is the forward activation (used
// as the ReLU gate: an entry propagates iff its pre-activation was > 0).
ConvGrads convBackward(const Tensor& gradOut, const Tensor& input, const ConvLayerParams& params,
                       const Tensor& output);

Tensor concat(std::span<const double> p, std::span<const double> q);
std::pair<Tensor, Tensor> concatBackward(const Tensor& gradOut, std::size_t sizeP,
                                         std::size_t sizeQ);

Tensor ewiseProduct(std::span<const double> p, std::span<const double> q);
std::pair<Tensor, Tensor> ewiseProductBackward(const Tensor& gradOut, std::span<const double> p,
                                               std::span<const double> q);

enum class Activation { None, Relu };

// Fully connected layer, weight is (in, out).
struct DenseLayerParams {
    Tensor weight;
    Tensor bias;

    std::size_t inSize() const { return weight.extent(0); }
    std::size_t outSize() const { return weight.extent(1); }
};

// activation(W^T x + b).
Tensor dense(std::span<const double> x, const DenseLayerParams& params, Activation activation);

struct DenseGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;
};

DenseGrads denseBackward(const Tensor& gradOut, std::span<const double> x,
                         const DenseLayerParams& params, const Tensor& output,
                         Activation activation);

}  // namespace oncf
