#include "oncf/nn_ops.hpp"

#include <algorithm>
#include <string>

namespace oncf {

EmbeddingPair lookup(const EmbeddingTable& table, std::int64_t u, std::int64_t i) {
    if (u < 0 || static_cast<std::size_t>(u) >= table.users()) {
        throw IndexError("lookup: user id " + std::to_string(u) + " out of range");
    }
    if (i < 0 || static_cast<std::size_t>(i) >= table.items()) {
        throw IndexError("lookup: item id " + std::to_string(i) + " out of range");
    }
    return {table.P.row(static_cast<std::size_t>(u)), table.Q.row(static_cast<std::size_t>(i))};
}

Tensor outerProduct(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw DimensionError("outerProduct: embedding lengths differ");
    }
    const std::size_t k = p.size();
    Tensor e({k, k});
    std::span<double> out = e.data();
    for (std::size_t a = 0; a < k; ++a) {
        const double pa = p[a];
        for (std::size_t b = 0; b < k; ++b) {
            out[a * k + b] = pa * q[b];
        }
    }
    return e;
}

std::pair<Tensor, Tensor> outerProductBackward(const Tensor& gradE, std::span<const double> p,
                                               std::span<const double> q) {
    const std::size_t k = p.size();
    if (q.size() != k || gradE.rank() != 2 || gradE.extent(0) != k || gradE.extent(1) != k) {
        throw DimensionError("outerProductBackward: shapes inconsistent");
    }
    Tensor gradP({k});
    Tensor gradQ({k});
    std::span<const double> g = gradE.data();
    for (std::size_t a = 0; a < k; ++a) {
        double acc = 0.0;
        for (std::size_t b = 0; b < k; ++b) {
            acc += g[a * k + b] * q[b];
            gradQ(b) += g[a * k + b] * p[a];
        }
        gradP(a) = acc;
    }
    return {std::move(gradP), std::move(gradQ)};
}

namespace {

struct ConvShape {
    std::size_t s = 0;     // input spatial extent
    std::size_t h = 0;     // output spatial extent = s / 2
    std::size_t cin = 0;
    std::size_t cout = 0;
};

ConvShape validateConv(const Tensor& input, const ConvLayerParams& params) {
    ConvShape sh;
    if (input.rank() == 2) {
        sh.s = input.extent(0);
        sh.cin = 1;
        if (input.extent(1) != sh.s) {
            throw DimensionError("convForward: input must be square");
        }
    } else if (input.rank() == 3) {
        sh.s = input.extent(0);
        sh.cin = input.extent(2);
        if (input.extent(1) != sh.s) {
            throw DimensionError("convForward: input must be square");
        }
    } else {
        throw DimensionError("convForward: input rank must be 2 or 3");
    }
    if (sh.s < 2 || sh.s % 2 != 0) {
        throw DimensionError("convForward: spatial extent must be even and >= 2, got " +
                             std::to_string(sh.s));
    }

    const Tensor& f = params.filters;
    if (f.rank() != 3 && f.rank() != 4) {
        throw DimensionError("convForward: filters must be (2,2,C) or (2,2,Cin,Cout)");
    }
    if (f.extent(0) != 2 || f.extent(1) != 2) {
        throw DimensionError("convForward: filter spatial extent is fixed at 2x2");
    }
    const std::size_t filterCin = f.rank() == 3 ? 1 : f.extent(2);
    sh.cout = f.rank() == 3 ? f.extent(2) : f.extent(3);
    if (filterCin != sh.cin) {
        throw DimensionError("convForward: filter expects " + std::to_string(filterCin) +
                             " input channels, input has " + std::to_string(sh.cin));
    }
    if (params.bias.rank() != 1 || params.bias.extent(0) != sh.cout) {
        throw DimensionError("convForward: bias must have one entry per feature map");
    }
    sh.h = sh.s / 2;
    return sh;
}

}  // namespace

Tensor convForward(const Tensor& input, const ConvLayerParams& params) {
    const ConvShape sh = validateConv(input, params);
    Tensor out({sh.h, sh.h, sh.cout});
    std::span<const double> in = input.data();
    std::span<const double> flt = params.filters.data();
    std::span<const double> bias = params.bias.data();
    std::span<double> dst = out.data();

    for (std::size_t i = 0; i < sh.h; ++i) {
        for (std::size_t j = 0; j < sh.h; ++j) {
            double* cell = &dst[(i * sh.h + j) * sh.cout];
            for (std::size_t c = 0; c < sh.cout; ++c) {
                cell[c] = bias[c];
            }
            for (std::size_t a = 0; a < 2; ++a) {
                for (std::size_t b = 0; b < 2; ++b) {
                    const double* src = &in[((2 * i + a) * sh.s + (2 * j + b)) * sh.cin];
                    const double* tap = &flt[((1 - a) * 2 + (1 - b)) * sh.cin * sh.cout];
                    for (std::size_t d = 0; d < sh.cin; ++d) {
                        const double v = src[d];
                        for (std::size_t c = 0; c < sh.cout; ++c) {
                            cell[c] += v * tap[d * sh.cout + c];
                        }
                    }
                }
            }
            for (std::size_t c = 0; c < sh.cout; ++c) {
                cell[c] = std::max(0.0, cell[c]);
            }
        }
    }
    return out;
}

ConvGrads convBackward(const Tensor& gradOut, const Tensor& input, const ConvLayerParams& params,
                       const Tensor& output) {
    const ConvShape sh = validateConv(input, params);
    if (!gradOut.sameShape(output) || gradOut.rank() != 3 || gradOut.extent(0) != sh.h ||
        gradOut.extent(1) != sh.h || gradOut.extent(2) != sh.cout) {
        throw DimensionError("convBackward: upstream gradient shape mismatch");
    }

    ConvGrads grads;
    grads.input = Tensor(input.shape());
    grads.filters = Tensor(params.filters.shape());
    grads.bias = Tensor(params.bias.shape());

    std::span<const double> in = input.data();
    std::span<const double> flt = params.filters.data();
    std::span<const double> go = gradOut.data();
    std::span<const double> act = output.data();
    std::span<double> gIn = grads.input.data();
    std::span<double> gFlt = grads.filters.data();
    std::span<double> gBias = grads.bias.data();

    // Stride 2 with a 2x2 kernel tiles the input exactly: input entry
    // (2i+a, 2j+b, d) feeds output cell (i, j, .) through filter tap
    // (1-a, 1-b, d, .) only, so the backward pass visits each pairing once.
    for (std::size_t i = 0; i < sh.h; ++i) {
        for (std::size_t j = 0; j < sh.h; ++j) {
            const std::size_t cellOff = (i * sh.h + j) * sh.cout;
            for (std::size_t a = 0; a < 2; ++a) {
                for (std::size_t b = 0; b < 2; ++b) {
                    const std::size_t srcOff = ((2 * i + a) * sh.s + (2 * j + b)) * sh.cin;
                    const std::size_t tapOff = ((1 - a) * 2 + (1 - b)) * sh.cin * sh.cout;
                    for (std::size_t d = 0; d < sh.cin; ++d) {
                        const double v = in[srcOff + d];
                        double acc = 0.0;
                        for (std::size_t c = 0; c < sh.cout; ++c) {
                            if (act[cellOff + c] > 0.0) {
                                const double g = go[cellOff + c];
                                acc += g * flt[tapOff + d * sh.cout + c];
                                gFlt[tapOff + d * sh.cout + c] += g * v;
                            }
                        }
                        gIn[srcOff + d] += acc;
                    }
                }
            }
            for (std::size_t c = 0; c < sh.cout; ++c) {
                if (act[cellOff + c] > 0.0) {
                    gBias[c] += go[cellOff + c];
                }
            }
        }
    }
    return grads;
}

Tensor concat(std::span<const double> p, std::span<const double> q) {
    Tensor out({p.size() + q.size()});
    std::span<double> dst = out.data();
    std::copy(p.begin(), p.end(), dst.begin());
    std::copy(q.begin(), q.end(), dst.begin() + static_cast<std::ptrdiff_t>(p.size()));
    return out;
}

std::pair<Tensor, Tensor> concatBackward(const Tensor& gradOut, std::size_t sizeP,
                                         std::size_t sizeQ) {
    if (gradOut.rank() != 1 || gradOut.size() != sizeP + sizeQ) {
        throw DimensionError("concatBackward: gradient length mismatch");
    }
    Tensor gradP({sizeP});
    Tensor gradQ({sizeQ});
    std::span<const double> g = gradOut.data();
    std::copy(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(sizeP), gradP.data().begin());
    std::copy(g.begin() + static_cast<std::ptrdiff_t>(sizeP), g.end(), gradQ.data().begin());
    return {std::move(gradP), std::move(gradQ)};
}

Tensor ewiseProduct(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw DimensionError("ewiseProduct: lengths differ");
    }
    Tensor out({p.size()});
    std::span<double> dst = out.data();
    for (std::size_t k = 0; k < p.size(); ++k) {
        dst[k] = p[k] * q[k];
    }
    return out;
}

std::pair<Tensor, Tensor> ewiseProductBackward(const Tensor& gradOut, std::span<const double> p,
                                               std::span<const double> q) {
    if (p.size() != q.size() || gradOut.rank() != 1 || gradOut.size() != p.size()) {
        throw DimensionError("ewiseProductBackward: shapes inconsistent");
    }
    Tensor gradP({p.size()});
    Tensor gradQ({q.size()});
    std::span<const double> g = gradOut.data();
    for (std::size_t k = 0; k < p.size(); ++k) {
        gradP(k) = g[k] * q[k];
        gradQ(k) = g[k] * p[k];
    }
    return {std::move(gradP), std::move(gradQ)};
}

Tensor dense(std::span<const double> x, const DenseLayerParams& params, Activation activation) {
    if (params.weight.rank() != 2 || params.weight.extent(0) != x.size() ||
        params.bias.rank() != 1 || params.bias.extent(0) != params.weight.extent(1)) {
        throw DimensionError("dense: shapes inconsistent");
    }
    const std::size_t in = params.weight.extent(0);
    const std::size_t out = params.weight.extent(1);
    Tensor z({out});
    std::span<double> zd = z.data();
    std::span<const double> w = params.weight.data();
    std::span<const double> b = params.bias.data();
    std::copy(b.begin(), b.end(), zd.begin());
    for (std::size_t d = 0; d < in; ++d) {
        const double v = x[d];
        for (std::size_t h = 0; h < out; ++h) {
            zd[h] += v * w[d * out + h];
        }
    }
    if (activation == Activation::Relu) {
        for (double& v : zd) {
            v = std::max(0.0, v);
        }
    }
    return z;
}

DenseGrads denseBackward(const Tensor& gradOut, std::span<const double> x,
                         const DenseLayerParams& params, const Tensor& output,
                         Activation activation) {
    const std::size_t in = params.weight.extent(0);
    const std::size_t out = params.weight.extent(1);
    if (gradOut.rank() != 1 || gradOut.size() != out || x.size() != in ||
        !gradOut.sameShape(output)) {
        throw DimensionError("denseBackward: shapes inconsistent");
    }

    DenseGrads grads;
    grads.input = Tensor({in});
    grads.weight = Tensor(params.weight.shape());
    grads.bias = Tensor({out});

    std::span<const double> g = gradOut.data();
    std::span<const double> act = output.data();
    std::span<double> gz = grads.bias.data();  // dL/dz doubles as the bias gradient
    for (std::size_t h = 0; h < out; ++h) {
        const bool alive = activation != Activation::Relu || act[h] > 0.0;
        gz[h] = alive ? g[h] : 0.0;
    }

    std::span<const double> w = params.weight.data();
    std::span<double> gw = grads.weight.data();
    std::span<double> gx = grads.input.data();
    for (std::size_t d = 0; d < in; ++d) {
        const double v = x[d];
        double acc = 0.0;
        for (std::size_t h = 0; h < out; ++h) {
            gw[d * out + h] = v * gz[h];
            acc += w[d * out + h] * gz[h];
        }
        gx[d] = acc;
    }
    return grads;
}

}  // namespace oncf
