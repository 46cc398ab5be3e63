#include "dgcn/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "dgcn/error.hpp"
#include "dgcn/sir.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dgcn {

namespace {

constexpr int H = lstm_hidden;
constexpr int G = lstm_gates;

int thread_index() {
#ifdef _OPENMP
    return omp_get_thread_num();
#else
    return 0;
#endif
}

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void require_k(int k) {
    if (k < min_neighborhood_size) {
        throw contract_error("neighborhood size k=" + std::to_string(k) + " is below the minimum of " +
                             std::to_string(min_neighborhood_size));
    }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

ParamLayout::ParamLayout(int k_) : k(k_) {
    require_k(k);
    pooled1 = k / 2;
    pooled2 = pooled1 / 2;
    std::size_t at = 0;
    auto take = [&](std::size_t n) {
        Slice s{at, n};
        at += n;
        return s;
    };
    conv1_w = take(conv1_channels * 9);
    conv1_b = take(conv1_channels);
    conv2_w = take(static_cast<std::size_t>(conv2_channels) * conv1_channels * 9);
    conv2_b = take(conv2_channels);
    fc_w = take(static_cast<std::size_t>(conv2_channels) * pooled2 * pooled2);
    fc_b = take(1);
    w_ih1 = take(G * 1);
    w_hh1 = take(G * H);
    b1 = take(G);
    w_ih2 = take(G * H);
    w_hh2 = take(G * H);
    b2 = take(G);
    head_w = take(H);
    head_b = take(1);
    total = at;
}

ModelParams ModelParams::zeros(int k, int s) {
    if (s < 1) throw contract_error("number of input snapshots must be positive");
    ParamLayout layout(k);
    ModelParams p;
    p.k = k;
    p.s = s;
    p.values.assign(layout.total, 0.0);
    return p;
}

ModelParams ModelParams::initialize(int k, int s, std::uint64_t seed) {
    ModelParams p = zeros(k, s);
    const ParamLayout L(k);
    Rng rng = rng_stream(seed, 0x1417);
    auto fill = [&](Slice slice, double fan_in) {
        const double bound = 1.0 / std::sqrt(fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : p.tensor(slice)) v = dist(rng);
    };
    fill(L.conv1_w, 9);
    fill(L.conv1_b, 9);
    fill(L.conv2_w, conv1_channels * 9);
    fill(L.conv2_b, conv1_channels * 9);
    fill(L.fc_w, static_cast<double>(L.fc_w.size));
    fill(L.fc_b, static_cast<double>(L.fc_w.size));
    fill(L.w_ih1, 1 + H);
    fill(L.w_hh1, 1 + H);
    fill(L.b1, 1 + H);
    fill(L.w_ih2, 2 * H);
    fill(L.w_hh2, 2 * H);
    fill(L.b2, 2 * H);
    fill(L.head_w, H);
    fill(L.head_b, H);
    return p;
}

CnnParams ModelParams::cnn() const {
    const ParamLayout L(k);
    return {k,
            tensor(L.conv1_w),
            tensor(L.conv1_b),
            tensor(L.conv2_w),
            tensor(L.conv2_b),
            tensor(L.fc_w),
            tensor(L.fc_b)};
}

LstmParams ModelParams::lstm() const {
    const ParamLayout L(k);
    return {tensor(L.w_ih1), tensor(L.w_hh1), tensor(L.b1),     tensor(L.w_ih2),
            tensor(L.w_hh2), tensor(L.b2),    tensor(L.head_w), tensor(L.head_b)};
}

namespace {

// ---------------------------------------------------------------------------
// CNN

struct CnnCache {
    int k = 0, p = 0, q = 0;
    std::vector<double> xpad;   // (k+2)^2
    std::vector<double> z1;     // 16 x k x k pre-activations
    std::vector<double> p1pad;  // 16 x (p+2)^2 pooled activations, zero border
    std::vector<std::uint32_t> idx1;
    std::vector<double> z2;  // 32 x p x p
    std::vector<double> flat;
    std::vector<std::uint32_t> idx2;
    // backward scratch
    std::vector<double> dz2, dp1pad, dz1;

    void resize(int k_) {
        if (k == k_) return;
        k = k_;
        p = k / 2;
        q = p / 2;
        const auto kp = static_cast<std::size_t>(k + 2);
        const auto pp = static_cast<std::size_t>(p + 2);
        xpad.assign(kp * kp, 0.0);
        z1.assign(static_cast<std::size_t>(conv1_channels) * k * k, 0.0);
        p1pad.assign(conv1_channels * pp * pp, 0.0);
        idx1.assign(static_cast<std::size_t>(conv1_channels) * p * p, 0);
        z2.assign(static_cast<std::size_t>(conv2_channels) * p * p, 0.0);
        flat.assign(static_cast<std::size_t>(conv2_channels) * q * q, 0.0);
        idx2.assign(flat.size(), 0);
        dz2.assign(z2.size(), 0.0);
        dp1pad.assign(p1pad.size(), 0.0);
        dz1.assign(z1.size(), 0.0);
    }
};

void check_cnn(const FeatureMatrix& m, const CnnParams& P) {
    require_k(P.k);
    if (m.k != P.k || m.values.size() != static_cast<std::size_t>(m.k) * m.k) {
        throw contract_error("feature matrix is " + std::to_string(m.k) + "x" + std::to_string(m.k) +
                             " but the CNN expects k=" + std::to_string(P.k));
    }
    const int q = (P.k / 2) / 2;
    if (P.conv1_w.size() != conv1_channels * 9u || P.conv1_b.size() != conv1_channels ||
        P.conv2_w.size() != conv2_channels * conv1_channels * 9u || P.conv2_b.size() != conv2_channels ||
        P.fc_w.size() != static_cast<std::size_t>(conv2_channels) * q * q || P.fc_b.size() != 1) {
        throw contract_error("CNN parameter shapes do not match k");
    }
}

// relu(z) pooled over 2x2 blocks; records the flat index of the winner.
template <typename Out>
void max_pool(const double* z, int side, int pooled, std::uint32_t* idx, Out&& store) {
    for (int i = 0; i < pooled; ++i) {
        for (int j = 0; j < pooled; ++j) {
            const int base = 2 * i * side + 2 * j;
            const int cand[4] = {base, base + 1, base + side, base + side + 1};
            int best = cand[0];
            double best_v = std::max(0.0, z[best]);
            for (int c = 1; c < 4; ++c) {
                const double v = std::max(0.0, z[cand[c]]);
                if (v > best_v) {
                    best_v = v;
                    best = cand[c];
                }
            }
            idx[i * pooled + j] = static_cast<std::uint32_t>(best);
            store(i, j, best_v);
        }
    }
}

double cnn_forward_cached(const FeatureMatrix& m, const CnnParams& P, CnnCache& c) {
    c.resize(P.k);
    const int k = c.k, p = c.p, q = c.q;
    const int kp = k + 2, pp = p + 2;

    for (int i = 0; i < k; ++i) {
        std::copy_n(m.values.data() + static_cast<std::size_t>(i) * k, k,
                    c.xpad.data() + static_cast<std::size_t>(i + 1) * kp + 1);
    }

    // conv1: 1 -> 16 channels, 3x3, zero padding 1
    for (int ch = 0; ch < conv1_channels; ++ch) {
        double* out = c.z1.data() + static_cast<std::size_t>(ch) * k * k;
        std::fill_n(out, k * k, P.conv1_b[ch]);
        for (int di = 0; di < 3; ++di) {
            for (int dj = 0; dj < 3; ++dj) {
                const double w = P.conv1_w[ch * 9 + di * 3 + dj];
                for (int i = 0; i < k; ++i) {
                    double* row = out + i * k;
                    const double* in = c.xpad.data() + (i + di) * kp + dj;
                    for (int j = 0; j < k; ++j) row[j] += w * in[j];
                }
            }
        }
        double* pooled = c.p1pad.data() + static_cast<std::size_t>(ch) * pp * pp;
        max_pool(out, k, p, c.idx1.data() + static_cast<std::size_t>(ch) * p * p,
                 [&](int i, int j, double v) { pooled[(i + 1) * pp + j + 1] = v; });
    }

    // conv2: 16 -> 32 channels, 3x3, zero padding 1
    for (int o = 0; o < conv2_channels; ++o) {
        double* out = c.z2.data() + static_cast<std::size_t>(o) * p * p;
        std::fill_n(out, p * p, P.conv2_b[o]);
        for (int ch = 0; ch < conv1_channels; ++ch) {
            const double* in_ch = c.p1pad.data() + static_cast<std::size_t>(ch) * pp * pp;
            const double* w9 = P.conv2_w.data() + (o * conv1_channels + ch) * 9;
            for (int di = 0; di < 3; ++di) {
                for (int dj = 0; dj < 3; ++dj) {
                    const double w = w9[di * 3 + dj];
                    for (int i = 0; i < p; ++i) {
                        double* row = out + i * p;
                        const double* in = in_ch + (i + di) * pp + dj;
                        for (int j = 0; j < p; ++j) row[j] += w * in[j];
                    }
                }
            }
        }
        double* flat = c.flat.data() + static_cast<std::size_t>(o) * q * q;
        max_pool(out, p, q, c.idx2.data() + static_cast<std::size_t>(o) * q * q,
                 [&](int i, int j, double v) { flat[i * q + j] = v; });
    }

    double y = P.fc_b[0];
    for (std::size_t i = 0; i < c.flat.size(); ++i) y += P.fc_w[i] * c.flat[i];
    return y;
}

struct CnnGrad {
    double *conv1_w, *conv1_b, *conv2_w, *conv2_b, *fc_w, *fc_b;
};

void cnn_backward(const CnnParams& P, CnnCache& c, double dy, const CnnGrad& g) {
    const int k = c.k, p = c.p, q = c.q;
    const int kp = k + 2, pp = p + 2;

    g.fc_b[0] += dy;
    std::fill(c.dz2.begin(), c.dz2.end(), 0.0);
    for (int o = 0; o < conv2_channels; ++o) {
        const std::size_t base = static_cast<std::size_t>(o) * q * q;
        const std::size_t zbase = static_cast<std::size_t>(o) * p * p;
        for (int u = 0; u < q * q; ++u) {
            g.fc_w[base + u] += dy * c.flat[base + u];
            const std::uint32_t at = c.idx2[base + u];
            if (c.z2[zbase + at] > 0.0) c.dz2[zbase + at] += dy * P.fc_w[base + u];
        }
    }

    std::fill(c.dp1pad.begin(), c.dp1pad.end(), 0.0);
    for (int o = 0; o < conv2_channels; ++o) {
        const double* dz = c.dz2.data() + static_cast<std::size_t>(o) * p * p;
        double bias = 0.0;
        for (int u = 0; u < p * p; ++u) bias += dz[u];
        g.conv2_b[o] += bias;
        for (int ch = 0; ch < conv1_channels; ++ch) {
            const double* in_ch = c.p1pad.data() + static_cast<std::size_t>(ch) * pp * pp;
            double* din_ch = c.dp1pad.data() + static_cast<std::size_t>(ch) * pp * pp;
            const std::size_t w_at = static_cast<std::size_t>(o * conv1_channels + ch) * 9;
            for (int di = 0; di < 3; ++di) {
                for (int dj = 0; dj < 3; ++dj) {
                    const double w = P.conv2_w[w_at + di * 3 + dj];
                    double acc = 0.0;
                    for (int i = 0; i < p; ++i) {
                        const double* drow = dz + i * p;
                        const double* in = in_ch + (i + di) * pp + dj;
                        double* din = din_ch + (i + di) * pp + dj;
                        for (int j = 0; j < p; ++j) {
                            acc += drow[j] * in[j];
                            din[j] += w * drow[j];
                        }
                    }
                    g.conv2_w[w_at + di * 3 + dj] += acc;
                }
            }
        }
    }

    std::fill(c.dz1.begin(), c.dz1.end(), 0.0);
    for (int ch = 0; ch < conv1_channels; ++ch) {
        const std::size_t zbase = static_cast<std::size_t>(ch) * k * k;
        const double* dpooled = c.dp1pad.data() + static_cast<std::size_t>(ch) * pp * pp;
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) {
                const std::uint32_t at = c.idx1[static_cast<std::size_t>(ch) * p * p + i * p + j];
                if (c.z1[zbase + at] > 0.0) c.dz1[zbase + at] += dpooled[(i + 1) * pp + j + 1];
            }
        }
        const double* dz = c.dz1.data() + zbase;
        double bias = 0.0;
        for (int u = 0; u < k * k; ++u) bias += dz[u];
        g.conv1_b[ch] += bias;
        for (int di = 0; di < 3; ++di) {
            for (int dj = 0; dj < 3; ++dj) {
                double acc = 0.0;
                for (int i = 0; i < k; ++i) {
                    const double* drow = dz + i * k;
                    const double* in = c.xpad.data() + (i + di) * kp + dj;
                    for (int j = 0; j < k; ++j) acc += drow[j] * in[j];
                }
                g.conv1_w[ch * 9 + di * 3 + dj] += acc;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// LSTM

struct LayerCache {
    std::vector<double> gates;  // T x 4H post-activation (i, f, g, o)
    std::vector<double> c;      // (T+1) x H, c[0] = 0
    std::vector<double> h;      // (T+1) x H, h[0] = 0
    std::vector<double> tanh_c; // T x H
    std::vector<double> dh_ext; // T x H gradient arriving from above
    std::vector<double> dx;     // T x in

    void resize(int T, int in) {
        gates.assign(static_cast<std::size_t>(T) * G, 0.0);
        c.assign(static_cast<std::size_t>(T + 1) * H, 0.0);
        h.assign(static_cast<std::size_t>(T + 1) * H, 0.0);
        tanh_c.assign(static_cast<std::size_t>(T) * H, 0.0);
        dh_ext.assign(static_cast<std::size_t>(T) * H, 0.0);
        dx.assign(static_cast<std::size_t>(T) * in, 0.0);
    }
};

struct LstmCache {
    int T = 0;
    LayerCache l1, l2;
};

void layer_forward(const double* x, int in, int T, std::span<const double> w_ih, std::span<const double> w_hh,
                   std::span<const double> b, LayerCache& L) {
    double a[G];
    for (int t = 0; t < T; ++t) {
        const double* xt = x + t * in;
        const double* hp = L.h.data() + static_cast<std::size_t>(t) * H;
        for (int r = 0; r < G; ++r) {
            double s = b[r];
            const double* wi = w_ih.data() + r * in;
            for (int j = 0; j < in; ++j) s += wi[j] * xt[j];
            const double* wh = w_hh.data() + r * H;
            for (int j = 0; j < H; ++j) s += wh[j] * hp[j];
            a[r] = s;
        }
        double* gt = L.gates.data() + static_cast<std::size_t>(t) * G;
        const double* cp = L.c.data() + static_cast<std::size_t>(t) * H;
        double* cn = L.c.data() + static_cast<std::size_t>(t + 1) * H;
        double* hn = L.h.data() + static_cast<std::size_t>(t + 1) * H;
        double* tc = L.tanh_c.data() + static_cast<std::size_t>(t) * H;
        for (int u = 0; u < H; ++u) {
            const double ig = sigmoid(a[u]);
            const double fg = sigmoid(a[H + u]);
            const double gg = std::tanh(a[2 * H + u]);
            const double og = sigmoid(a[3 * H + u]);
            gt[u] = ig;
            gt[H + u] = fg;
            gt[2 * H + u] = gg;
            gt[3 * H + u] = og;
            cn[u] = fg * cp[u] + ig * gg;
            tc[u] = std::tanh(cn[u]);
            hn[u] = og * tc[u];
        }
    }
}

void layer_backward(const double* x, int in, int T, std::span<const double> w_ih, std::span<const double> w_hh,
                    LayerCache& L, double* dw_ih, double* dw_hh, double* db) {
    double dh_next[H] = {};
    double dc_next[H] = {};
    double da[G];
    for (int t = T - 1; t >= 0; --t) {
        const double* gt = L.gates.data() + static_cast<std::size_t>(t) * G;
        const double* cp = L.c.data() + static_cast<std::size_t>(t) * H;
        const double* tc = L.tanh_c.data() + static_cast<std::size_t>(t) * H;
        const double* dhe = L.dh_ext.data() + static_cast<std::size_t>(t) * H;
        for (int u = 0; u < H; ++u) {
            const double ig = gt[u], fg = gt[H + u], gg = gt[2 * H + u], og = gt[3 * H + u];
            const double dh = dhe[u] + dh_next[u];
            const double dout = dh * tc[u];
            const double dc = dc_next[u] + dh * og * (1.0 - tc[u] * tc[u]);
            da[u] = dc * gg * ig * (1.0 - ig);
            da[H + u] = dc * cp[u] * fg * (1.0 - fg);
            da[2 * H + u] = dc * ig * (1.0 - gg * gg);
            da[3 * H + u] = dout * og * (1.0 - og);
            dc_next[u] = dc * fg;
        }
        const double* xt = x + t * in;
        const double* hp = L.h.data() + static_cast<std::size_t>(t) * H;
        double* dxt = L.dx.data() + static_cast<std::size_t>(t) * in;
        std::fill_n(dxt, in, 0.0);
        std::fill_n(dh_next, H, 0.0);
        for (int r = 0; r < G; ++r) {
            const double d = da[r];
            db[r] += d;
            double* gwi = dw_ih + r * in;
            const double* wi = w_ih.data() + r * in;
            for (int j = 0; j < in; ++j) {
                gwi[j] += d * xt[j];
                dxt[j] += wi[j] * d;
            }
            double* gwh = dw_hh + r * H;
            const double* wh = w_hh.data() + r * H;
            for (int j = 0; j < H; ++j) {
                gwh[j] += d * hp[j];
                dh_next[j] += wh[j] * d;
            }
        }
    }
}

void check_lstm(const LstmParams& P) {
    if (P.w_ih1.size() != G || P.w_hh1.size() != static_cast<std::size_t>(G) * H || P.b1.size() != G ||
        P.w_ih2.size() != static_cast<std::size_t>(G) * H || P.w_hh2.size() != static_cast<std::size_t>(G) * H ||
        P.b2.size() != G || P.head_w.size() != H || P.head_b.size() != 1) {
        throw contract_error("LSTM parameter shapes are inconsistent");
    }
}

double lstm_forward_cached(std::span<const double> x, const LstmParams& P, LstmCache& c) {
    const int T = static_cast<int>(x.size());
    c.T = T;
    c.l1.resize(T, 1);
    c.l2.resize(T, H);
    layer_forward(x.data(), 1, T, P.w_ih1, P.w_hh1, P.b1, c.l1);
    layer_forward(c.l1.h.data() + H, H, T, P.w_ih2, P.w_hh2, P.b2, c.l2);
    const double* h_last = c.l2.h.data() + static_cast<std::size_t>(T) * H;
    double y = P.head_b[0];
    for (int u = 0; u < H; ++u) y += P.head_w[u] * h_last[u];
    return y;
}

struct LstmGrad {
    double *w_ih1, *w_hh1, *b1, *w_ih2, *w_hh2, *b2, *head_w, *head_b;
};

// Leaves d(output)/d(input_t) in c.l1.dx.
void lstm_backward(std::span<const double> x, const LstmParams& P, LstmCache& c, double dy, const LstmGrad& g) {
    const int T = c.T;
    const double* h_last = c.l2.h.data() + static_cast<std::size_t>(T) * H;
    g.head_b[0] += dy;
    std::fill(c.l2.dh_ext.begin(), c.l2.dh_ext.end(), 0.0);
    for (int u = 0; u < H; ++u) {
        g.head_w[u] += dy * h_last[u];
        c.l2.dh_ext[static_cast<std::size_t>(T - 1) * H + u] = dy * P.head_w[u];
    }
    layer_backward(c.l1.h.data() + H, H, T, P.w_ih2, P.w_hh2, c.l2, g.w_ih2, g.w_hh2, g.b2);
    std::copy(c.l2.dx.begin(), c.l2.dx.end(), c.l1.dh_ext.begin());
    layer_backward(x.data(), 1, T, P.w_ih1, P.w_hh1, c.l1, g.w_ih1, g.w_hh1, g.b1);
}

// ---------------------------------------------------------------------------
// Whole model

struct Workspace {
    std::vector<CnnCache> cnn;
    LstmCache lstm;
    std::vector<double> x;
};

void check_sequence(const Sample& s, const ModelParams& P) {
    if (static_cast<int>(s.sequence.size()) != P.s) {
        throw contract_error("sequence has " + std::to_string(s.sequence.size()) +
                             " snapshots but the model expects s=" + std::to_string(P.s));
    }
}

double forward_cached(std::span<const FeatureMatrix> seq, const CnnParams& cnn, const LstmParams& lstm,
                      Workspace& ws) {
    if (ws.cnn.size() < seq.size()) ws.cnn.resize(seq.size());
    ws.x.resize(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) ws.x[t] = cnn_forward_cached(seq[t], cnn, ws.cnn[t]);
    return lstm_forward_cached(ws.x, lstm, ws.lstm);
}

// Adds d(scale * (pred - label)^2)/d(theta) into grad; returns (pred - label)^2.
double sample_gradient(const Sample& s, const ModelParams& P, const ParamLayout& L, double scale, Workspace& ws,
                       double* grad) {
    const CnnParams cnn = P.cnn();
    const LstmParams lstm = P.lstm();
    const double pred = forward_cached(s.sequence, cnn, lstm, ws);
    const double err = pred - s.label;
    const double dy = scale * 2.0 * err;

    LstmGrad lg{grad + L.w_ih1.offset, grad + L.w_hh1.offset, grad + L.b1.offset, grad + L.w_ih2.offset,
                grad + L.w_hh2.offset, grad + L.b2.offset,    grad + L.head_w.offset, grad + L.head_b.offset};
    lstm_backward(ws.x, lstm, ws.lstm, dy, lg);
    CnnGrad cg{grad + L.conv1_w.offset, grad + L.conv1_b.offset, grad + L.conv2_w.offset,
               grad + L.conv2_b.offset, grad + L.fc_w.offset,    grad + L.fc_b.offset};
    for (std::size_t t = 0; t < s.sequence.size(); ++t) cnn_backward(cnn, ws.cnn[t], ws.lstm.l1.dx[t], cg);
    return err * err;
}

}  // namespace

double cnn_forward(const FeatureMatrix& matrix, const CnnParams& params) {
    check_cnn(matrix, params);
    CnnCache cache;
    return cnn_forward_cached(matrix, params, cache);
}

double lstm_forward(std::span<const double> inputs, const LstmParams& params) {
    if (inputs.empty()) throw contract_error("LSTM input sequence is empty");
    check_lstm(params);
    LstmCache cache;
    return lstm_forward_cached(inputs, params, cache);
}

double predict(std::span<const FeatureMatrix> sequence, const ModelParams& params) {
    if (static_cast<int>(sequence.size()) != params.s) {
        throw contract_error("sequence has " + std::to_string(sequence.size()) +
                             " snapshots but the model expects s=" + std::to_string(params.s));
    }
    const CnnParams cnn = params.cnn();
    const LstmParams lstm = params.lstm();
    for (const auto& m : sequence) check_cnn(m, cnn);
    Workspace ws;
    return forward_cached(sequence, cnn, lstm, ws);
}

double loss(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size()) throw contract_error("prediction and label counts differ");
    if (predictions.empty()) throw contract_error("loss of an empty batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - labels[i];
        sum += d * d;
    }
    return sum / static_cast<double>(predictions.size());
}

std::vector<double> predict_batch(std::span<const Sample> batch, const ModelParams& params) {
    const CnnParams cnn = params.cnn();
    const LstmParams lstm = params.lstm();
    for (const auto& s : batch) {
        check_sequence(s, params);
        for (const auto& m : s.sequence) check_cnn(m, cnn);
    }
    std::vector<double> out(batch.size());
    std::vector<Workspace> ws(static_cast<std::size_t>(thread_count()));
    const auto n = static_cast<std::int64_t>(batch.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            forward_cached(batch[static_cast<std::size_t>(i)].sequence, cnn, lstm, ws[thread_index()]);
    }
    return out;
}

double batch_loss(std::span<const Sample> batch, const ModelParams& params) {
    const auto preds = predict_batch(batch, params);
    std::vector<double> labels;
    labels.reserve(batch.size());
    for (const auto& s : batch) labels.push_back(s.label);
    return loss(preds, labels);
}

struct GradientEngine::Impl {
    int k, s;
    ParamLayout layout;
    std::vector<Workspace> workspaces;
    std::vector<std::vector<double>> per_sample;
    std::vector<double> errors;
};

GradientEngine::GradientEngine(int k, int s, std::size_t max_batch)
    : impl_(std::make_unique<Impl>(Impl{k, s, ParamLayout(k), {}, {}, {}})) {
    impl_->workspaces.resize(static_cast<std::size_t>(thread_count()));
    impl_->per_sample.assign(max_batch, std::vector<double>(impl_->layout.total, 0.0));
    impl_->errors.assign(max_batch, 0.0);
}

GradientEngine::~GradientEngine() = default;

double GradientEngine::compute(std::span<const Sample> batch, const ModelParams& params, double loss_scale,
                               std::vector<double>& grad) {
    std::vector<std::size_t> all(batch.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return compute(batch, all, params, loss_scale, grad);
}

double GradientEngine::compute(std::span<const Sample> pool, std::span<const std::size_t> batch,
                               const ModelParams& params, double loss_scale, std::vector<double>& grad) {
    auto& I = *impl_;
    if (params.k != I.k || params.s != I.s) throw contract_error("gradient engine built for another shape");
    if (batch.empty()) throw contract_error("gradient of an empty batch");
    const CnnParams cnn = params.cnn();
    for (std::size_t idx : batch) {
        if (idx >= pool.size()) throw contract_error("batch index outside the sample pool");
        check_sequence(pool[idx], params);
        for (const auto& m : pool[idx].sequence) check_cnn(m, cnn);
    }
    if (batch.size() > I.per_sample.size()) {
        I.per_sample.resize(batch.size(), std::vector<double>(I.layout.total, 0.0));
        I.errors.resize(batch.size(), 0.0);
    }

    const double scale = loss_scale / static_cast<double>(batch.size());
    const auto n = static_cast<std::int64_t>(batch.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto b = static_cast<std::size_t>(i);
        auto& g = I.per_sample[b];
        std::fill(g.begin(), g.end(), 0.0);
        I.errors[b] = sample_gradient(pool[batch[b]], params, I.layout, scale, I.workspaces[thread_index()], g.data());
    }

    grad.assign(I.layout.total, 0.0);
    double sq = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& g = I.per_sample[i];
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[j];
        sq += I.errors[i];
    }
    return scale * sq;
}

BatchGradient backward(std::span<const Sample> batch, const ModelParams& params, double loss_scale) {
    GradientEngine engine(params.k, params.s, batch.size());
    BatchGradient out;
    out.grad = ModelParams::zeros(params.k, params.s);
    out.loss = engine.compute(batch, params, loss_scale, out.grad.values);
    return out;
}

std::vector<std::uint32_t> activation_pattern(std::span<const Sample> batch, const ModelParams& params) {
    const CnnParams cnn = params.cnn();
    std::vector<std::uint32_t> out;
    CnnCache c;
    for (const auto& s : batch) {
        for (const auto& m : s.sequence) {
            check_cnn(m, cnn);
            cnn_forward_cached(m, cnn, c);
            for (double z : c.z1) out.push_back(z > 0.0);
            out.insert(out.end(), c.idx1.begin(), c.idx1.end());
            for (double z : c.z2) out.push_back(z > 0.0);
            out.insert(out.end(), c.idx2.begin(), c.idx2.end());
        }
    }
    return out;
}

namespace {

constexpr char checkpoint_magic[8] = {'D', 'G', 'C', 'N', 'P', 'R', 'M', '\0'};
constexpr std::uint32_t checkpoint_version = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian");

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw validation_error("truncated model checkpoint");
    return v;
}

}  // namespace

void save_params(std::ostream& out, const ModelParams& params) {
    out.write(checkpoint_magic, sizeof checkpoint_magic);
    put(out, checkpoint_version);
    put(out, static_cast<std::int32_t>(params.k));
    put(out, static_cast<std::int32_t>(params.s));
    put(out, static_cast<std::uint32_t>(architecture_tag.size()));
    out.write(architecture_tag.data(), static_cast<std::streamsize>(architecture_tag.size()));
    put(out, static_cast<std::uint64_t>(params.values.size()));
    out.write(reinterpret_cast<const char*>(params.values.data()),
              static_cast<std::streamsize>(params.values.size() * sizeof(double)));
    if (!out) throw error("failed to write model checkpoint");
}

ModelParams load_params(std::istream& in) {
    char magic[sizeof checkpoint_magic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, checkpoint_magic, sizeof magic) != 0) {
        throw validation_error("not a model checkpoint");
    }
    if (get<std::uint32_t>(in) != checkpoint_version) throw validation_error("unsupported checkpoint version");
    const int k = get<std::int32_t>(in);
    const int s = get<std::int32_t>(in);
    std::string tag(get<std::uint32_t>(in), '\0');
    in.read(tag.data(), static_cast<std::streamsize>(tag.size()));
    if (!in || tag != architecture_tag) throw validation_error("checkpoint architecture '" + tag + "' is unknown");
    ModelParams p = ModelParams::zeros(k, s);
    if (get<std::uint64_t>(in) != p.values.size()) throw validation_error("checkpoint tensor size mismatch");
    in.read(reinterpret_cast<char*>(p.values.data()), static_cast<std::streamsize>(p.values.size() * sizeof(double)));
    if (!in) throw validation_error("truncated model checkpoint");
    return p;
}

}  // namespace dgcn
