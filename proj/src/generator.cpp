#include "topoforge/generator.hpp"

#include <cmath>
#include <stdexcept>

namespace topoforge {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// activations per layer, input included; last column block is the output
std::vector<Eigen::MatrixXd> activations(const GeneratorParams& p, const Eigen::MatrixXd& x) {
    const int depth = static_cast<int>(p.w.size());
    std::vector<Eigen::MatrixXd> a(depth + 1);
    a[0] = x;
    for (int l = 0; l < depth; ++l) {
        Eigen::MatrixXd z = (p.w[l] * a[l]).colwise() + p.b[l];
        if (l + 1 < depth)
            a[l + 1] = z.array().tanh().matrix();
        else
            a[l + 1] = z.unaryExpr([](double v) { return sigmoid(v); });
    }
    return a;
}

struct Gradients {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    double loss = 0.0;
};

// loss and reverse-mode gradients over one batch; lambda holds one weight
// column per sample
Gradients batch_gradients(const GeneratorParams& p, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& t, const Eigen::MatrixXd& lambda) {
    const int depth = static_cast<int>(p.w.size());
    const std::vector<Eigen::MatrixXd> a = activations(p, x);
    const Eigen::MatrixXd& y = a[depth];

    Gradients g;
    g.w.resize(depth);
    g.b.resize(depth);
    Eigen::MatrixXd r = y - t;
    g.loss = (lambda.array() * r.array().square()).sum();

    // d loss / d z_out through the sigmoid
    Eigen::MatrixXd delta =
        (2.0 * lambda.array() * r.array() * y.array() * (1.0 - y.array())).matrix();
    for (int l = depth - 1; l >= 0; --l) {
        g.w[l] = delta * a[l].transpose();
        g.b[l] = delta.rowwise().sum();
        if (l > 0)
            delta = (p.w[l].transpose() * delta).array() * (1.0 - a[l].array().square());
    }
    return g;
}

struct Packed {
    Eigen::MatrixXd x, t, lambda;
};

Packed pack(const GeneratorParams& p, const std::vector<TrainSample>& data) {
    const int in = p.arch.input_dim(), out = p.arch.output_dim();
    const int m = static_cast<int>(data.size());
    Packed pk{Eigen::MatrixXd(in, m), Eigen::MatrixXd(out, m), Eigen::MatrixXd::Ones(out, m)};
    for (int i = 0; i < m; ++i) {
        const TrainSample& s = data[i];
        if (s.input.size() != in) throw std::invalid_argument("train: input dim mismatch");
        if (s.target.size() != out) throw std::invalid_argument("train: target dim mismatch");
        if (s.lambda.size() != 0 && s.lambda.size() != out)
            throw std::invalid_argument("train: weight dim mismatch");
        pk.x.col(i) = s.input;
        pk.t.col(i) = s.target;
        if (s.lambda.size() != 0) pk.lambda.col(i) = s.lambda;
    }
    return pk;
}

}  // namespace

std::int64_t Architecture::parameter_count() const {
    std::int64_t n = 0;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l)
        n += std::int64_t(layers[l]) * layers[l + 1] + layers[l + 1];
    return n;
}

void Architecture::validate() const {
    if (layers.size() < 2) throw std::invalid_argument("architecture needs input and output");
    for (int width : layers)
        if (width <= 0) throw std::invalid_argument("architecture has a zero-width layer");
}

GeneratorParams init_generator(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    GeneratorParams p;
    p.arch = arch;
    p.init_seed = seed;
    Rng rng(seed);
    const int depth = static_cast<int>(arch.layers.size()) - 1;
    p.w.resize(depth);
    p.b.resize(depth);
    for (int l = 0; l < depth; ++l) {
        const int in = arch.layers[l], out = arch.layers[l + 1];
        const double s = std::sqrt(6.0 / (in + out));
        p.w[l].resize(out, in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) p.w[l](r, c) = rng.uniform(-s, s);
        p.b[l] = Eigen::VectorXd::Zero(out);
    }
    return p;
}

Eigen::VectorXd forward(const GeneratorParams& params, const Eigen::VectorXd& input) {
    return forward_batch(params, input);
}

Eigen::MatrixXd forward_batch(const GeneratorParams& params, const Eigen::MatrixXd& inputs) {
    if (inputs.rows() != params.arch.input_dim())
        throw std::invalid_argument("forward: input dim mismatch");
    if (!inputs.allFinite()) throw std::invalid_argument("forward: non-finite input");
    return activations(params, inputs).back();
}

Eigen::VectorXd sensitivity_weights(const Eigen::VectorXd& grad_f, bool* degenerate) {
    const Eigen::ArrayXd mag = grad_f.array().abs();
    const double lo = mag.minCoeff(), hi = mag.maxCoeff();
    if (degenerate) *degenerate = hi <= lo;
    if (hi <= lo) return Eigen::VectorXd::Ones(grad_f.size());
    return ((mag - lo) / (hi - lo)).matrix();
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0 || lr_decay <= 0.0) throw std::invalid_argument("train: bad rate");
    if (batch_size <= 0 || epochs <= 0) throw std::invalid_argument("train: bad schedule");
}

double weighted_loss(const GeneratorParams& params, const std::vector<TrainSample>& data) {
    if (data.empty()) return 0.0;
    const Packed pk = pack(params, data);
    const Eigen::MatrixXd y = forward_batch(params, pk.x);
    return (pk.lambda.array() * (y - pk.t).array().square()).sum();
}

LossGradients loss_gradients(const GeneratorParams& params,
                             const std::vector<TrainSample>& data) {
    if (data.empty()) throw std::invalid_argument("loss_gradients: empty dataset");
    const Packed pk = pack(params, data);
    Gradients g = batch_gradients(params, pk.x, pk.t, pk.lambda);
    return LossGradients{std::move(g.w), std::move(g.b), g.loss};
}

TrainResult train(GeneratorParams theta0, const std::vector<TrainSample>& data,
                  const TrainConfig& config) {
    config.validate();
    theta0.arch.validate();
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    const Packed pk = pack(theta0, data);
    const int m = static_cast<int>(data.size());
    const int depth = static_cast<int>(theta0.w.size());
    const bool full_batch = m < config.full_batch_below;

    auto full_loss = [&](const GeneratorParams& p) {
        const Eigen::MatrixXd y = forward_batch(p, pk.x);
        return (pk.lambda.array() * (y - pk.t).array().square()).sum();
    };

    TrainResult res;
    res.initial_loss = full_loss(theta0);
    res.params = theta0;
    double best_loss = res.initial_loss;
    res.loss_trace.reserve(config.epochs);

    // adaptive-moment state, one slot per parameter block
    std::vector<Eigen::MatrixXd> mw(depth), vw(depth);
    std::vector<Eigen::VectorXd> mb(depth), vb(depth);
    for (int l = 0; l < depth; ++l) {
        mw[l] = Eigen::MatrixXd::Zero(theta0.w[l].rows(), theta0.w[l].cols());
        vw[l] = mw[l];
        mb[l] = Eigen::VectorXd::Zero(theta0.b[l].size());
        vb[l] = mb[l];
    }
    const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
    std::int64_t step = 0;

    GeneratorParams theta = std::move(theta0);
    Rng rng(config.seed);
    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = config.learning_rate * std::pow(config.lr_decay, epoch);
        if (!full_batch) rng.shuffle(order);
        const int stride = full_batch ? m : config.batch_size;
        for (int at = 0; at < m; at += stride) {
            const int bs = std::min(stride, m - at);
            Eigen::MatrixXd bx(pk.x.rows(), bs), bt(pk.t.rows(), bs), bl(pk.t.rows(), bs);
            for (int i = 0; i < bs; ++i) {
                const int src = full_batch ? at + i : order[at + i];
                bx.col(i) = pk.x.col(src);
                bt.col(i) = pk.t.col(src);
                bl.col(i) = pk.lambda.col(src);
            }
            const Gradients g = batch_gradients(theta, bx, bt, bl);
            ++step;
            for (int l = 0; l < depth; ++l) {
                if (config.optimizer == Optimizer::Sgd) {
                    theta.w[l] -= lr * g.w[l];
                    theta.b[l] -= lr * g.b[l];
                    continue;
                }
                mw[l] = b1 * mw[l] + (1.0 - b1) * g.w[l];
                vw[l] = b2 * vw[l] + (1.0 - b2) * g.w[l].array().square().matrix();
                mb[l] = b1 * mb[l] + (1.0 - b1) * g.b[l];
                vb[l] = b2 * vb[l] + (1.0 - b2) * g.b[l].array().square().matrix();
                const double c1 = 1.0 - std::pow(b1, double(step));
                const double c2 = 1.0 - std::pow(b2, double(step));
                theta.w[l] -=
                    (lr * (mw[l] / c1).array() / ((vw[l] / c2).array().sqrt() + adam_eps))
                        .matrix();
                theta.b[l] -=
                    (lr * (mb[l] / c1).array() / ((vb[l] / c2).array().sqrt() + adam_eps))
                        .matrix();
            }
        }
        const double loss = full_loss(theta);
        res.loss_trace.push_back(loss);
        if (loss < best_loss) {
            best_loss = loss;
            res.params = theta;
        }
        if (loss <= config.loss_tol) break;
    }
    res.final_loss = best_loss;
    return res;
}

}  // namespace topoforge
