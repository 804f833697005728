#include "lob/nn/layers.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <limits>

namespace lob::nn {

void check_finite(std::span<const double> values, const std::string& what) {
    for (double v : values)
        if (!std::isfinite(v)) throw NonFiniteActivation(what);
}

void check_finite_grad(std::span<const double> values, const std::string& what) {
    for (double v : values)
        if (!std::isfinite(v)) throw NonFiniteGradient(what);
}

namespace {

struct Shape3 {
    size_t c = 0, h = 0, w = 0;
    size_t numel() const { return c * h * w; }
};

Shape3 shape3_of(const Tensor& x, const std::string& what) {
    if (x.ndim() != 4)
        throw ShapeMismatch(what + ": expected a [B,C,H,W] tensor, got " + x.shape_str());
    return Shape3{x.dim(1), x.dim(2), x.dim(3)};
}

void require_shape(const Tensor& x, const Shape3& s, const std::string& what) {
    const Shape3 got = shape3_of(x, what);
    if (got.c != s.c || got.h != s.h || got.w != s.w)
        throw ShapeMismatch(what + ": expected [B," + std::to_string(s.c) + "," +
                            std::to_string(s.h) + "," + std::to_string(s.w) + "], got " +
                            x.shape_str());
}

double he_limit(size_t fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y[0..n) += a * x[0..n); the workhorse inner loop, contiguous on both
// sides so it vectorizes under strict FP semantics.
inline void axpy(double* y, double a, const double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// ---------------------------------------------------------------------
// Conv2D
// ---------------------------------------------------------------------

class Conv2DLayer final : public Layer {
public:
    Conv2DLayer(std::string label, const Conv2DSpec& sp, Shape3 in)
        : label_(std::move(label)), sp_(sp), in_(in) {
        if (sp.filters < 1 || sp.kh < 1 || sp.kw < 1 || sp.sh < 1 || sp.sw < 1)
            throw ShapeMismatch(label_ + ": bad filter geometry");
        const int ph = sp.zero_pad ? sp.kh - 1 : 0;
        const int pw = sp.zero_pad ? sp.kw - 1 : 0;
        ph0_ = ph / 2;
        pw0_ = pw / 2;
        const auto out_dim = [](size_t in_dim, int pad, int k, int s) {
            const long long n = static_cast<long long>(in_dim) + pad - k;
            return n < 0 ? 0LL : n / s + 1;
        };
        const long long oh = out_dim(in.h, ph, sp.kh, sp.sh);
        const long long ow = out_dim(in.w, pw, sp.kw, sp.sw);
        if (oh < 1 || ow < 1)
            throw ShapeMismatch(label_ + ": " + std::to_string(sp.kh) + "x" +
                                std::to_string(sp.kw) + " filter does not fit input " +
                                std::to_string(in.h) + "x" + std::to_string(in.w));
        out_ = Shape3{static_cast<size_t>(sp.filters), static_cast<size_t>(oh),
                      static_cast<size_t>(ow)};
    }

    std::string label() const override { return label_; }
    Shape3 out_shape() const { return out_; }

    size_t param_count() const override {
        return static_cast<size_t>(sp_.filters) * in_.c * sp_.kh * sp_.kw +
               static_cast<size_t>(sp_.filters);
    }

    void init_params(std::span<double> params, Rng& rng) const override {
        const size_t wlen = param_count() - sp_.filters;
        const double limit = he_limit(in_.c * sp_.kh * sp_.kw);
        for (size_t i = 0; i < wlen; ++i) params[i] = rng.uniform(-limit, limit);
        for (size_t i = wlen; i < params.size(); ++i) params[i] = 0.0;
    }

    // The convolution runs as an im2col matmul: col[k][n] with
    // k = (c, kh, kw) and n = (oh, ow), out[f][n] = bias[f] +
    // sum_k W[f][k] col[k][n], accumulated k-outer so the inner loop is
    // a contiguous axpy over n.

    size_t col_k() const { return in_.c * sp_.kh * sp_.kw; }
    size_t col_n() const { return out_.h * out_.w; }

    void build_col(const double* xb, double* col) const {
        const size_t C = in_.c, H = in_.h, W = in_.w;
        const size_t OH = out_.h, OW = out_.w;
        const size_t N = col_n();
        std::memset(col, 0, col_k() * N * sizeof(double));
        for (size_t c = 0; c < C; ++c) {
            const double* xc = xb + c * H * W;
            for (int kh = 0; kh < sp_.kh; ++kh)
                for (int kw = 0; kw < sp_.kw; ++kw) {
                    double* colk =
                        col + ((c * sp_.kh + kh) * sp_.kw + static_cast<size_t>(kw)) * N;
                    for (size_t oh = 0; oh < OH; ++oh) {
                        const long long ih = static_cast<long long>(oh) * sp_.sh + kh - ph0_;
                        if (ih < 0 || ih >= static_cast<long long>(H)) continue;
                        const double* xrow = xc + static_cast<size_t>(ih) * W;
                        double* crow = colk + oh * OW;
                        for (size_t ow = 0; ow < OW; ++ow) {
                            const long long iw =
                                static_cast<long long>(ow) * sp_.sw + kw - pw0_;
                            if (iw >= 0 && iw < static_cast<long long>(W))
                                crow[ow] = xrow[iw];
                        }
                    }
                }
        }
    }

    void scatter_col(const double* dcol, double* dxb) const {
        const size_t C = in_.c, H = in_.h, W = in_.w;
        const size_t OH = out_.h, OW = out_.w;
        const size_t N = col_n();
        for (size_t c = 0; c < C; ++c) {
            double* dxc = dxb + c * H * W;
            for (int kh = 0; kh < sp_.kh; ++kh)
                for (int kw = 0; kw < sp_.kw; ++kw) {
                    const double* colk =
                        dcol + ((c * sp_.kh + kh) * sp_.kw + static_cast<size_t>(kw)) * N;
                    for (size_t oh = 0; oh < OH; ++oh) {
                        const long long ih = static_cast<long long>(oh) * sp_.sh + kh - ph0_;
                        if (ih < 0 || ih >= static_cast<long long>(H)) continue;
                        double* dxrow = dxc + static_cast<size_t>(ih) * W;
                        const double* crow = colk + oh * OW;
                        for (size_t ow = 0; ow < OW; ++ow) {
                            const long long iw =
                                static_cast<long long>(ow) * sp_.sw + kw - pw0_;
                            if (iw >= 0 && iw < static_cast<long long>(W))
                                dxrow[iw] += crow[ow];
                        }
                    }
                }
        }
    }

    Tensor forward(const Tensor& x, std::span<const double> params, Workspace& ws,
                   const Ctx& ctx) const override {
        require_shape(x, in_, label_);
        const size_t B = x.dim(0);
        Tensor out({B, out_.c, out_.h, out_.w});
        const double* wts = params.data();
        const double* bias = params.data() + (param_count() - sp_.filters);

        const size_t C = in_.c, H = in_.h, W = in_.w;
        const size_t F = out_.c;
        const size_t K = col_k(), N = col_n();
        std::vector<double> col(K * N);

        for (size_t b = 0; b < B; ++b) {
            build_col(x.data.data() + b * C * H * W, col.data());
            double* ob = out.data.data() + b * F * N;
            for (size_t f = 0; f < F; ++f) {
                double* orow = ob + f * N;
                for (size_t n = 0; n < N; ++n) orow[n] = bias[f];
                const double* wf = wts + f * K;
                for (size_t k = 0; k < K; ++k) axpy(orow, wf[k], col.data() + k * N, N);
            }
        }
        if (ctx.need_grad) ws.stash = {x};
        return out;
    }

    Tensor backward(const Tensor& gout, std::span<const double> params, const Workspace& ws,
                    std::span<double> pgrad) const override {
        const Tensor& x = ws.stash[0];
        const size_t B = x.dim(0);
        Tensor dx(x.shape);
        const size_t wlen = param_count() - sp_.filters;
        const double* wts = params.data();
        double* dwts = pgrad.data();
        double* dbias = pgrad.data() + wlen;

        const size_t C = in_.c, H = in_.h, W = in_.w;
        const size_t F = out_.c;
        const size_t K = col_k(), N = col_n();
        std::vector<double> col(K * N), colT(N * K), dcol(K * N);

        for (size_t b = 0; b < B; ++b) {
            build_col(x.data.data() + b * C * H * W, col.data());
            for (size_t k = 0; k < K; ++k)
                for (size_t n = 0; n < N; ++n) colT[n * K + k] = col[k * N + n];

            const double* gb = gout.data.data() + b * F * N;
            std::memset(dcol.data(), 0, dcol.size() * sizeof(double));
            for (size_t f = 0; f < F; ++f) {
                const double* grow = gb + f * N;
                double bacc = 0.0;
                for (size_t n = 0; n < N; ++n) bacc += grow[n];
                dbias[f] += bacc;

                double* dwf = dwts + f * K;
                for (size_t n = 0; n < N; ++n) axpy(dwf, grow[n], colT.data() + n * K, K);

                const double* wf = wts + f * K;
                for (size_t k = 0; k < K; ++k) axpy(dcol.data() + k * N, wf[k], grow, N);
            }
            scatter_col(dcol.data(), dx.data.data() + b * C * H * W);
        }
        return dx;
    }

private:
    std::string label_;
    Conv2DSpec sp_;
    Shape3 in_, out_;
    int ph0_ = 0, pw0_ = 0;
};

// ---------------------------------------------------------------------
// LeakyReLU
// ---------------------------------------------------------------------

class LeakyReLULayer final : public Layer {
public:
    LeakyReLULayer(std::string label, double slope)
        : label_(std::move(label)), slope_(slope) {}
    std::string label() const override { return label_; }

    Tensor forward(const Tensor& x, std::span<const double>, Workspace& ws,
                   const Ctx& ctx) const override {
        Tensor out(x.shape);
        for (size_t i = 0; i < x.numel(); ++i) {
            const double v = x.data[i];
            out.data[i] = v > 0.0 ? v : slope_ * v;
        }
        if (ctx.need_grad) {
            // compact sign mask
            std::vector<int32_t> mask(x.numel());
            for (size_t i = 0; i < x.numel(); ++i) mask[i] = x.data[i] > 0.0 ? 1 : 0;
            ws.idx = {std::move(mask)};
        }
        return out;
    }

    Tensor backward(const Tensor& gout, std::span<const double>, const Workspace& ws,
                    std::span<double>) const override {
        const auto& mask = ws.idx[0];
        Tensor dx(gout.shape);
        for (size_t i = 0; i < gout.numel(); ++i)
            dx.data[i] = mask[i] ? gout.data[i] : slope_ * gout.data[i];
        return dx;
    }

private:
    std::string label_;
    double slope_;
};

// ---------------------------------------------------------------------
// MaxPool ("same" padding positions are excluded from the max)
// ---------------------------------------------------------------------

class MaxPoolLayer final : public Layer {
public:
    MaxPoolLayer(std::string label, const MaxPoolSpec& sp, Shape3 in)
        : label_(std::move(label)), sp_(sp), in_(in) {
        const int ph = sp.zero_pad ? sp.kh - 1 : 0;
        const int pw = sp.zero_pad ? sp.kw - 1 : 0;
        ph0_ = ph / 2;
        pw0_ = pw / 2;
        const auto out_dim = [](size_t in_dim, int pad, int k, int s) {
            const long long n = static_cast<long long>(in_dim) + pad - k;
            return n < 0 ? 0LL : n / s + 1;
        };
        const long long oh = out_dim(in.h, ph, sp.kh, sp.sh);
        const long long ow = out_dim(in.w, pw, sp.kw, sp.sw);
        if (oh < 1 || ow < 1)
            throw ShapeMismatch(label_ + ": pool window does not fit input");
        out_ = Shape3{in.c, static_cast<size_t>(oh), static_cast<size_t>(ow)};
    }

    std::string label() const override { return label_; }
    Shape3 out_shape() const { return out_; }

    Tensor forward(const Tensor& x, std::span<const double>, Workspace& ws,
                   const Ctx& ctx) const override {
        require_shape(x, in_, label_);
        const size_t B = x.dim(0);
        Tensor out({B, out_.c, out_.h, out_.w});
        std::vector<int32_t> argmax(ctx.need_grad ? out.numel() : 0);

        const size_t C = in_.c, H = in_.h, W = in_.w;
        const size_t OH = out_.h, OW = out_.w;
        size_t o = 0;
        for (size_t b = 0; b < B; ++b) {
            for (size_t c = 0; c < C; ++c) {
                const double* xc = x.data.data() + (b * C + c) * H * W;
                for (size_t oh = 0; oh < OH; ++oh) {
                    for (size_t ow = 0; ow < OW; ++ow, ++o) {
                        double best = -std::numeric_limits<double>::infinity();
                        int32_t best_idx = -1;
                        for (int kh = 0; kh < sp_.kh; ++kh) {
                            const long long ih =
                                static_cast<long long>(oh) * sp_.sh + kh - ph0_;
                            if (ih < 0 || ih >= static_cast<long long>(H)) continue;
                            for (int kw = 0; kw < sp_.kw; ++kw) {
                                const long long iw =
                                    static_cast<long long>(ow) * sp_.sw + kw - pw0_;
                                if (iw < 0 || iw >= static_cast<long long>(W)) continue;
                                const int32_t idx = static_cast<int32_t>(ih * W + iw);
                                if (xc[idx] > best) {
                                    best = xc[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        out.data[o] = best;
                        if (ctx.need_grad) argmax[o] = best_idx;
                    }
                }
            }
        }
        if (ctx.need_grad) ws.idx = {std::move(argmax)};
        return out;
    }

    Tensor backward(const Tensor& gout, std::span<const double>, const Workspace& ws,
                    std::span<double>) const override {
        const auto& argmax = ws.idx[0];
        const size_t B = gout.dim(0);
        Tensor dx({B, in_.c, in_.h, in_.w});
        const size_t C = in_.c, plane = in_.h * in_.w;
        const size_t oplane = out_.h * out_.w;
        size_t o = 0;
        for (size_t b = 0; b < B; ++b)
            for (size_t c = 0; c < C; ++c) {
                double* dxc = dx.data.data() + (b * C + c) * plane;
                for (size_t i = 0; i < oplane; ++i, ++o) dxc[argmax[o]] += gout.data[o];
            }
        return dx;
    }

private:
    std::string label_;
    MaxPoolSpec sp_;
    Shape3 in_, out_;
    int ph0_ = 0, pw0_ = 0;
};

// ---------------------------------------------------------------------
// Dropout (inverted scaling, per-sample seeded masks)
// ---------------------------------------------------------------------

class DropoutLayer final : public Layer {
public:
    DropoutLayer(std::string label, double rate, uint64_t salt)
        : label_(std::move(label)), rate_(rate), salt_(salt) {
        if (rate < 0.0 || rate >= 1.0) throw ConfigInvalid(label_ + ": rate must be in [0,1)");
    }
    std::string label() const override { return label_; }

    Tensor forward(const Tensor& x, std::span<const double>, Workspace& ws,
                   const Ctx& ctx) const override {
        if (!ctx.training || rate_ == 0.0) {
            if (ctx.need_grad) ws.stash.clear();
            return x;
        }
        const size_t B = x.dim(0);
        if (ctx.sample_seeds.size() != B)
            throw Error(label_ + ": training forward needs one seed per batch row");
        const size_t per = x.numel() / B;
        Tensor mask(x.shape);
        const double scale = 1.0 / (1.0 - rate_);
        for (size_t b = 0; b < B; ++b) {
            Rng rng(mix64(ctx.sample_seeds[b] ^ salt_));
            double* mb = mask.data.data() + b * per;
            for (size_t i = 0; i < per; ++i) mb[i] = rng.uniform() < rate_ ? 0.0 : scale;
        }
        Tensor out(x.shape);
        for (size_t i = 0; i < x.numel(); ++i) out.data[i] = x.data[i] * mask.data[i];
        if (ctx.need_grad) ws.stash = {std::move(mask)};
        return out;
    }

    Tensor backward(const Tensor& gout, std::span<const double>, const Workspace& ws,
                    std::span<double>) const override {
        if (ws.stash.empty()) return gout; // eval or rate 0
        const Tensor& mask = ws.stash[0];
        Tensor dx(gout.shape);
        for (size_t i = 0; i < gout.numel(); ++i) dx.data[i] = gout.data[i] * mask.data[i];
        return dx;
    }

private:
    std::string label_;
    double rate_;
    uint64_t salt_;
};

// ---------------------------------------------------------------------
// Inception block: parallel conv branches concatenated on channels
// ---------------------------------------------------------------------

class InceptionLayer final : public Layer {
public:
    InceptionLayer(std::string label, const InceptionSpec& sp, Shape3 in)
        : label_(std::move(label)), in_(in) {
        const auto conv = [&](std::vector<std::unique_ptr<Layer>>& branch, Shape3 cur,
                              int kh, const char* name) {
            Conv2DSpec cs{sp.filters, kh, 1, true, 1, 1};
            auto layer = std::make_unique<Conv2DLayer>(label_ + name, cs, cur);
            const Shape3 next = layer->out_shape();
            branch.push_back(std::move(layer));
            branch.push_back(std::make_unique<LeakyReLULayer>(label_ + name + ".lrelu", 0.01));
            return next;
        };
        Shape3 cur = conv(branches_[0], in, 1, ".b1.conv1x1");
        cur = conv(branches_[0], cur, 3, ".b1.conv3x1");
        out_ = cur;
        cur = conv(branches_[1], in, 1, ".b2.conv1x1");
        conv(branches_[1], cur, 5, ".b2.conv5x1");
        auto pool = std::make_unique<MaxPoolLayer>(label_ + ".b3.pool3x1",
                                                   MaxPoolSpec{3, 1, true, 1, 1}, in);
        const Shape3 pooled = pool->out_shape();
        branches_[2].push_back(std::move(pool));
        conv(branches_[2], pooled, 1, ".b3.conv1x1");
        out_.c = static_cast<size_t>(sp.filters) * 3;
    }

    std::string label() const override { return label_; }
    Shape3 out_shape() const { return out_; }

    size_t param_count() const override {
        size_t n = 0;
        for (const auto& branch : branches_)
            for (const auto& l : branch) n += l->param_count();
        return n;
    }

    void init_params(std::span<double> params, Rng& rng) const override {
        size_t off = 0;
        for (const auto& branch : branches_)
            for (const auto& l : branch) {
                l->init_params(params.subspan(off, l->param_count()), rng);
                off += l->param_count();
            }
    }

    Tensor forward(const Tensor& x, std::span<const double> params, Workspace& ws,
                   const Ctx& ctx) const override {
        require_shape(x, in_, label_);
        const size_t B = x.dim(0);
        Tensor out({B, out_.c, out_.h, out_.w});
        ws.branches.assign(3, {});

        size_t off = 0;
        size_t c_base = 0;
        for (size_t bi = 0; bi < 3; ++bi) {
            ws.branches[bi].resize(branches_[bi].size());
            Tensor cur = x;
            for (size_t li = 0; li < branches_[bi].size(); ++li) {
                const auto& l = branches_[bi][li];
                cur = l->forward(cur, params.subspan(off, l->param_count()),
                                 ws.branches[bi][li], ctx);
                off += l->param_count();
            }
            // concat on the channel axis
            const size_t bc = cur.dim(1), plane = out_.h * out_.w;
            for (size_t b = 0; b < B; ++b)
                std::memcpy(out.data.data() + (b * out_.c + c_base) * plane,
                            cur.data.data() + b * bc * plane,
                            bc * plane * sizeof(double));
            c_base += bc;
        }
        return out;
    }

    Tensor backward(const Tensor& gout, std::span<const double> params, const Workspace& ws,
                    std::span<double> pgrad) const override {
        const size_t B = gout.dim(0);
        Tensor dx({B, in_.c, in_.h, in_.w});
        const size_t plane = out_.h * out_.w;

        size_t off = 0;
        size_t c_base = 0;
        for (size_t bi = 0; bi < 3; ++bi) {
            // slice this branch's channels out of gout
            const size_t bc = out_.c / 3;
            Tensor g({B, bc, out_.h, out_.w});
            for (size_t b = 0; b < B; ++b)
                std::memcpy(g.data.data() + b * bc * plane,
                            gout.data.data() + (b * out_.c + c_base) * plane,
                            bc * plane * sizeof(double));
            c_base += bc;

            // walk the branch backwards; parameter offsets go forwards
            std::vector<size_t> offs(branches_[bi].size());
            for (size_t li = 0; li < branches_[bi].size(); ++li) {
                offs[li] = off;
                off += branches_[bi][li]->param_count();
            }
            for (size_t li = branches_[bi].size(); li-- > 0;) {
                const auto& l = branches_[bi][li];
                g = l->backward(g, params.subspan(offs[li], l->param_count()),
                                ws.branches[bi][li],
                                pgrad.subspan(offs[li], l->param_count()));
            }
            for (size_t i = 0; i < dx.numel(); ++i) dx.data[i] += g.data[i];
        }
        return dx;
    }

private:
    std::string label_;
    Shape3 in_, out_;
    std::array<std::vector<std::unique_ptr<Layer>>, 3> branches_;
};

// ---------------------------------------------------------------------
// LSTM over the time axis; consumes [B,C,H,W] as T=H steps of C*W
// features, emits the final hidden state [B,U].
// ---------------------------------------------------------------------

class LstmLayer final : public Layer {
public:
    LstmLayer(std::string label, const LstmSpec& sp, Shape3 in)
        : label_(std::move(label)), in_(in), T_(in.h), F_(in.c * in.w),
          U_(static_cast<size_t>(sp.units)) {
        if (sp.units < 1) throw ShapeMismatch(label_ + ": units must be positive");
    }

    std::string label() const override { return label_; }
    size_t units() const { return U_; }

    // Wx [4U,F], Wh [4U,U], b [4U]; gate blocks i, f, g, o
    size_t param_count() const override { return 4 * U_ * (F_ + U_ + 1); }

    void init_params(std::span<double> params, Rng& rng) const override {
        const double lx = he_limit(F_);
        const double lh = he_limit(U_);
        size_t p = 0;
        for (size_t i = 0; i < 4 * U_ * F_; ++i) params[p++] = rng.uniform(-lx, lx);
        for (size_t i = 0; i < 4 * U_ * U_; ++i) params[p++] = rng.uniform(-lh, lh);
        for (size_t g = 0; g < 4; ++g)
            for (size_t u = 0; u < U_; ++u) params[p++] = g == 1 ? 1.0 : 0.0; // forget bias 1
    }

    Tensor forward(const Tensor& x, std::span<const double> params, Workspace& ws,
                   const Ctx& ctx) const override {
        require_shape(x, in_, label_);
        const size_t B = x.dim(0);
        const double* Wx = params.data();
        const double* Wh = params.data() + 4 * U_ * F_;
        const double* bias = params.data() + 4 * U_ * (F_ + U_);

        // time-major feature sequence: X[b,t,f] with f = c*W + w
        Tensor X({B, T_, F_});
        for (size_t b = 0; b < B; ++b)
            for (size_t c = 0; c < in_.c; ++c)
                for (size_t t = 0; t < T_; ++t) {
                    const double* src = x.data.data() + ((b * in_.c + c) * T_ + t) * in_.w;
                    double* dst = X.data.data() + (b * T_ + t) * F_ + c * in_.w;
                    std::memcpy(dst, src, in_.w * sizeof(double));
                }

        Tensor Hseq({T_ + 1, B, U_});
        Tensor Cseq({T_ + 1, B, U_});
        Tensor gates({T_, B, 4 * U_});
        Tensor tanhc({T_, B, U_});

        // transposed weight copies so the gate accumulation runs as
        // contiguous axpys over the 4U axis
        std::vector<double> WxT(F_ * 4 * U_), WhT(U_ * 4 * U_);
        for (size_t gu = 0; gu < 4 * U_; ++gu) {
            for (size_t f = 0; f < F_; ++f) WxT[f * 4 * U_ + gu] = Wx[gu * F_ + f];
            for (size_t u = 0; u < U_; ++u) WhT[u * 4 * U_ + gu] = Wh[gu * U_ + u];
        }

        std::vector<double> pre(4 * U_);
        for (size_t t = 0; t < T_; ++t) {
            for (size_t b = 0; b < B; ++b) {
                const double* xt = X.data.data() + (b * T_ + t) * F_;
                const double* hprev = Hseq.data.data() + (t * B + b) * U_;
                const double* cprev = Cseq.data.data() + (t * B + b) * U_;
                std::memcpy(pre.data(), bias, 4 * U_ * sizeof(double));
                for (size_t f = 0; f < F_; ++f)
                    axpy(pre.data(), xt[f], WxT.data() + f * 4 * U_, 4 * U_);
                for (size_t u = 0; u < U_; ++u)
                    axpy(pre.data(), hprev[u], WhT.data() + u * 4 * U_, 4 * U_);
                double* gt = gates.data.data() + (t * B + b) * 4 * U_;
                double* ct = Cseq.data.data() + ((t + 1) * B + b) * U_;
                double* ht = Hseq.data.data() + ((t + 1) * B + b) * U_;
                double* tc = tanhc.data.data() + (t * B + b) * U_;
                for (size_t u = 0; u < U_; ++u) {
                    const double ig = sigmoid(pre[u]);
                    const double fg = sigmoid(pre[U_ + u]);
                    const double gg = std::tanh(pre[2 * U_ + u]);
                    const double og = sigmoid(pre[3 * U_ + u]);
                    gt[u] = ig;
                    gt[U_ + u] = fg;
                    gt[2 * U_ + u] = gg;
                    gt[3 * U_ + u] = og;
                    ct[u] = fg * cprev[u] + ig * gg;
                    tc[u] = std::tanh(ct[u]);
                    ht[u] = og * tc[u];
                }
            }
        }

        Tensor out({B, U_});
        std::memcpy(out.data.data(), Hseq.data.data() + T_ * B * U_,
                    B * U_ * sizeof(double));
        if (ctx.need_grad) {
            ws.stash.clear();
            ws.stash.push_back(std::move(X));
            ws.stash.push_back(std::move(Hseq));
            ws.stash.push_back(std::move(Cseq));
            ws.stash.push_back(std::move(gates));
            ws.stash.push_back(std::move(tanhc));
        }
        return out;
    }

    Tensor backward(const Tensor& gout, std::span<const double> params, const Workspace& ws,
                    std::span<double> pgrad) const override {
        const Tensor& X = ws.stash[0];
        const Tensor& Hseq = ws.stash[1];
        const Tensor& Cseq = ws.stash[2];
        const Tensor& gates = ws.stash[3];
        const Tensor& tanhc = ws.stash[4];
        const size_t B = gout.dim(0);

        const double* Wx = params.data();
        const double* Wh = params.data() + 4 * U_ * F_;
        double* dWx = pgrad.data();
        double* dWh = pgrad.data() + 4 * U_ * F_;
        double* db = pgrad.data() + 4 * U_ * (F_ + U_);

        Tensor dX({B, T_, F_});
        std::vector<double> dh(B * U_), dc(B * U_, 0.0), da(4 * U_);
        std::memcpy(dh.data(), gout.data.data(), B * U_ * sizeof(double));

        for (size_t t = T_; t-- > 0;) {
            for (size_t b = 0; b < B; ++b) {
                const double* gt = gates.data.data() + (t * B + b) * 4 * U_;
                const double* tc = tanhc.data.data() + (t * B + b) * U_;
                const double* cprev = Cseq.data.data() + (t * B + b) * U_;
                const double* hprev = Hseq.data.data() + (t * B + b) * U_;
                const double* xt = X.data.data() + (b * T_ + t) * F_;
                double* dhb = dh.data() + b * U_;
                double* dcb = dc.data() + b * U_;

                for (size_t u = 0; u < U_; ++u) {
                    const double ig = gt[u], fg = gt[U_ + u], gg = gt[2 * U_ + u],
                                 og = gt[3 * U_ + u];
                    const double dto = dhb[u] * tc[u];
                    const double dct = dcb[u] + dhb[u] * og * (1.0 - tc[u] * tc[u]);
                    const double dti = dct * gg;
                    const double dtg = dct * ig;
                    const double dtf = dct * cprev[u];
                    da[u] = dti * ig * (1.0 - ig);
                    da[U_ + u] = dtf * fg * (1.0 - fg);
                    da[2 * U_ + u] = dtg * (1.0 - gg * gg);
                    da[3 * U_ + u] = dto * og * (1.0 - og);
                    dcb[u] = dct * fg; // becomes dc_{t-1}
                }

                double* dxt = dX.data.data() + (b * T_ + t) * F_;
                for (size_t u = 0; u < U_; ++u) dhb[u] = 0.0; // rebuilt below
                for (size_t gu = 0; gu < 4 * U_; ++gu) {
                    const double g = da[gu];
                    if (g == 0.0) continue;
                    db[gu] += g;
                    const double* wx = Wx + gu * F_;
                    double* dwx = dWx + gu * F_;
                    for (size_t f = 0; f < F_; ++f) {
                        dwx[f] += g * xt[f];
                        dxt[f] += g * wx[f];
                    }
                    const double* wh = Wh + gu * U_;
                    double* dwh = dWh + gu * U_;
                    for (size_t u = 0; u < U_; ++u) {
                        dwh[u] += g * hprev[u];
                        dhb[u] += g * wh[u];
                    }
                }
            }
        }

        // fold dX back to the [B,C,H,W] layout
        Tensor dx({B, in_.c, in_.h, in_.w});
        for (size_t b = 0; b < B; ++b)
            for (size_t c = 0; c < in_.c; ++c)
                for (size_t t = 0; t < T_; ++t) {
                    const double* src = dX.data.data() + (b * T_ + t) * F_ + c * in_.w;
                    double* dst = dx.data.data() + ((b * in_.c + c) * T_ + t) * in_.w;
                    std::memcpy(dst, src, in_.w * sizeof(double));
                }
        return dx;
    }

private:
    std::string label_;
    Shape3 in_;
    size_t T_, F_, U_;
};

// ---------------------------------------------------------------------
// Dense head
// ---------------------------------------------------------------------

class DenseLayer final : public Layer {
public:
    DenseLayer(std::string label, size_t fin, size_t units)
        : label_(std::move(label)), fin_(fin), units_(units) {}

    std::string label() const override { return label_; }
    size_t param_count() const override { return units_ * fin_ + units_; }

    void init_params(std::span<double> params, Rng& rng) const override {
        const double limit = he_limit(fin_);
        for (size_t i = 0; i < units_ * fin_; ++i) params[i] = rng.uniform(-limit, limit);
        for (size_t i = units_ * fin_; i < params.size(); ++i) params[i] = 0.0;
    }

    Tensor forward(const Tensor& x, std::span<const double> params, Workspace& ws,
                   const Ctx& ctx) const override {
        if (x.ndim() != 2 || x.dim(1) != fin_)
            throw ShapeMismatch(label_ + ": expected [B," + std::to_string(fin_) +
                                "], got " + x.shape_str());
        const size_t B = x.dim(0);
        Tensor out({B, units_});
        const double* W = params.data();
        const double* bias = params.data() + units_ * fin_;
        for (size_t b = 0; b < B; ++b) {
            const double* xb = x.data.data() + b * fin_;
            double* ob = out.data.data() + b * units_;
            for (size_t u = 0; u < units_; ++u) {
                double acc = bias[u];
                const double* wu = W + u * fin_;
                for (size_t f = 0; f < fin_; ++f) acc += wu[f] * xb[f];
                ob[u] = acc;
            }
        }
        if (ctx.need_grad) ws.stash = {x};
        return out;
    }

    Tensor backward(const Tensor& gout, std::span<const double> params, const Workspace& ws,
                    std::span<double> pgrad) const override {
        const Tensor& x = ws.stash[0];
        const size_t B = x.dim(0);
        const double* W = params.data();
        double* dW = pgrad.data();
        double* db = pgrad.data() + units_ * fin_;
        Tensor dx({B, fin_});
        for (size_t b = 0; b < B; ++b) {
            const double* xb = x.data.data() + b * fin_;
            const double* gb = gout.data.data() + b * units_;
            double* dxb = dx.data.data() + b * fin_;
            for (size_t u = 0; u < units_; ++u) {
                const double g = gb[u];
                db[u] += g;
                const double* wu = W + u * fin_;
                double* dwu = dW + u * fin_;
                for (size_t f = 0; f < fin_; ++f) {
                    dwu[f] += g * xb[f];
                    dxb[f] += g * wu[f];
                }
            }
        }
        return dx;
    }

private:
    std::string label_;
    size_t fin_, units_;
};

} // namespace

// ---------------------------------------------------------------------
// build_layers
// ---------------------------------------------------------------------

BuiltLayers build_layers(const ArchitectureSpec& spec) {
    spec.validate();
    BuiltLayers out;
    Shape3 cur{1, static_cast<size_t>(spec.time), static_cast<size_t>(spec.width)};
    out.shapes.push_back({"input", cur.c, cur.h, cur.w});

    bool sequential = false; // true once the LSTM collapsed the grid
    size_t units = 0;

    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const std::string tag = "layer" + std::to_string(i);
        const auto grid_only = [&](const char* what) {
            if (sequential)
                throw ShapeMismatch(tag + ": " + what + " cannot follow the LSTM stage");
        };
        std::visit(
            [&](const auto& sp) {
                using T = std::decay_t<decltype(sp)>;
                if constexpr (std::is_same_v<T, Conv2DSpec>) {
                    grid_only("conv2d");
                    auto conv = std::make_unique<Conv2DLayer>(tag + ":conv2d", sp, cur);
                    cur = conv->out_shape();
                    out.layers.push_back(std::move(conv));
                    out.layers.push_back(
                        std::make_unique<LeakyReLULayer>(tag + ":lrelu", 0.01));
                    out.shapes.push_back({"conv2d", cur.c, cur.h, cur.w});
                } else if constexpr (std::is_same_v<T, InceptionSpec>) {
                    grid_only("inception");
                    auto inc = std::make_unique<InceptionLayer>(tag + ":inception", sp, cur);
                    cur = inc->out_shape();
                    out.layers.push_back(std::move(inc));
                    out.shapes.push_back({"inception", cur.c, cur.h, cur.w});
                } else if constexpr (std::is_same_v<T, MaxPoolSpec>) {
                    grid_only("maxpool");
                    auto pool = std::make_unique<MaxPoolLayer>(tag + ":maxpool", sp, cur);
                    cur = pool->out_shape();
                    out.layers.push_back(std::move(pool));
                    out.shapes.push_back({"maxpool", cur.c, cur.h, cur.w});
                } else if constexpr (std::is_same_v<T, DropoutSpec>) {
                    out.layers.push_back(
                        std::make_unique<DropoutLayer>(tag + ":dropout", sp.rate, mix64(i)));
                    out.shapes.push_back(sequential
                                             ? StageShape{"dropout", units, 0, 0}
                                             : StageShape{"dropout", cur.c, cur.h, cur.w});
                } else if constexpr (std::is_same_v<T, LstmSpec>) {
                    grid_only("lstm");
                    auto lstm = std::make_unique<LstmLayer>(tag + ":lstm", sp, cur);
                    units = lstm->units();
                    out.layers.push_back(std::move(lstm));
                    sequential = true;
                    out.shapes.push_back({"lstm", units, 0, 0});
                } else if constexpr (std::is_same_v<T, DenseSpec>) {
                    if (!sequential)
                        throw ShapeMismatch(tag + ": dense head must follow the LSTM");
                    out.layers.push_back(std::make_unique<DenseLayer>(
                        tag + ":dense", units, static_cast<size_t>(sp.units)));
                    units = static_cast<size_t>(sp.units);
                    out.shapes.push_back({"dense", units, 0, 0});
                }
            },
            spec.layers[i]);
    }

    out.spans.reserve(out.layers.size());
    for (const auto& l : out.layers) {
        out.spans.emplace_back(out.param_count, l->param_count());
        out.param_count += l->param_count();
    }
    return out;
}

} // namespace lob::nn
