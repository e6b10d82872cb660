#include "skyfed/model.hpp"

#include "skyfed/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace skyfed {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Row-wise softmax, stabilized by the row max.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd p = (z.colwise() - z.rowwise().maxCoeff()).array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    return p;
}

// Mean cross-entropy of logits z against integer labels.
double cross_entropy(const Eigen::MatrixXd& z, const Eigen::VectorXi& y) {
    double total = 0.0;
    for (long s = 0; s < z.rows(); ++s) {
        const double m = z.row(s).maxCoeff();
        total += m + std::log((z.row(s).array() - m).exp().sum()) - z(s, y(s));
    }
    return total / static_cast<double>(z.rows());
}

double argmax_accuracy(const Eigen::MatrixXd& z, const Eigen::VectorXi& y) {
    long hits = 0;
    for (long s = 0; s < z.rows(); ++s) {
        Eigen::Index best = 0;
        z.row(s).maxCoeff(&best);
        hits += best == y(s);
    }
    return static_cast<double>(hits) / static_cast<double>(z.rows());
}

void check_dim(const LocalDataset& d, long dim) {
    if (d.dim() != dim)
        throw ValidationError("M", "dataset has " + std::to_string(d.dim()) + " features, model expects " +
                                       std::to_string(dim));
}

}  // namespace

Eigen::VectorXd Model::initial(Rng&) const {
    return Eigen::VectorXd::Zero(num_params());
}

double Model::accuracy(const Eigen::VectorXd&, const LocalDataset&) const {
    return kNaN;
}

Eigen::VectorXd Model::sample_gradient_sq_norms(const Eigen::VectorXd& w, const LocalDataset& d) const {
    Eigen::VectorXd out(d.size());
    for (long s = 0; s < d.size(); ++s)
        out(s) = sample_gradient(w, d.features.row(s).transpose(), d.labels.size() ? d.labels(s) : 0).squaredNorm();
    return out;
}

double Model::mixed_norm_sq(const Eigen::VectorXd&, const Eigen::VectorXd&, int) const {
    throw ValidationError("model", "mixed Hessian bound is only defined for the convex models");
}

// Quadratic

QuadraticModel::QuadraticModel(Eigen::VectorXd curvature) : curvature_(std::move(curvature)) {
    if (curvature_.size() == 0 || (curvature_.array() <= 0.0).any())
        throw ValidationError("curvature", "must be nonempty and strictly positive");
}

double QuadraticModel::loss(const Eigen::VectorXd& w, const LocalDataset& d) const {
    check_dim(d, num_params());
    const Eigen::MatrixXd diff = (-d.features).rowwise() + w.transpose();
    return 0.5 * (diff.array().square().rowwise() * curvature_.transpose().array()).sum() / static_cast<double>(d.size());
}

Eigen::VectorXd QuadraticModel::minimizer(const LocalDataset& d) const {
    check_dim(d, num_params());
    return d.features.colwise().mean().transpose();
}

Eigen::VectorXd QuadraticModel::gradient(const Eigen::VectorXd& w, const LocalDataset& d) const {
    return curvature_.cwiseProduct(w - minimizer(d));
}

Eigen::VectorXd QuadraticModel::sample_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int) const {
    return curvature_.cwiseProduct(w - x);
}

Eigen::VectorXd QuadraticModel::sample_gradient_sq_norms(const Eigen::VectorXd& w, const LocalDataset& d) const {
    check_dim(d, num_params());
    const Eigen::MatrixXd diff = (-d.features).rowwise() + w.transpose();
    return (diff.array().rowwise() * curvature_.transpose().array()).square().rowwise().sum();
}

double QuadraticModel::mixed_norm_sq(const Eigen::VectorXd&, const Eigen::VectorXd&, int) const {
    return curvature_.array().square().maxCoeff();
}

// Logistic

LogisticModel::LogisticModel(long dim, int classes, double l2) : dim_(dim), classes_(classes), l2_(l2) {
    if (dim < 1) throw ValidationError("M", "must be >= 1");
    if (classes < 2) throw ValidationError("classes", "logistic model needs at least 2 classes");
    if (!(l2 > 0.0)) throw ValidationError("l2", "must be positive for strong convexity");
}

Eigen::MatrixXd LogisticModel::logits(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const {
    Eigen::Map<const Eigen::MatrixXd> W(w.data(), classes_, dim_ + 1);
    Eigen::MatrixXd z = X * W.leftCols(dim_).transpose();
    z.rowwise() += W.col(dim_).transpose();
    return z;
}

double LogisticModel::loss(const Eigen::VectorXd& w, const LocalDataset& d) const {
    check_dim(d, dim_);
    return cross_entropy(logits(w, d.features), d.labels) + 0.5 * l2_ * w.squaredNorm();
}

Eigen::VectorXd LogisticModel::gradient(const Eigen::VectorXd& w, const LocalDataset& d) const {
    check_dim(d, dim_);
    Eigen::MatrixXd r = softmax_rows(logits(w, d.features));
    for (long s = 0; s < d.size(); ++s) r(s, d.labels(s)) -= 1.0;
    r /= static_cast<double>(d.size());
    Eigen::MatrixXd g(classes_, dim_ + 1);
    g.leftCols(dim_) = r.transpose() * d.features;
    g.col(dim_) = r.colwise().sum().transpose();
    return Eigen::Map<const Eigen::VectorXd>(g.data(), g.size()) + l2_ * w;
}

Eigen::VectorXd LogisticModel::sample_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) const {
    Eigen::Map<const Eigen::MatrixXd> W(w.data(), classes_, dim_ + 1);
    Eigen::VectorXd z = W.leftCols(dim_) * x + W.col(dim_);
    Eigen::VectorXd p = (z.array() - z.maxCoeff()).exp();
    p /= p.sum();
    p(y) -= 1.0;
    Eigen::MatrixXd g(classes_, dim_ + 1);
    g.leftCols(dim_) = p * x.transpose();
    g.col(dim_) = p;
    return Eigen::Map<const Eigen::VectorXd>(g.data(), g.size()) + l2_ * w;
}

double LogisticModel::accuracy(const Eigen::VectorXd& w, const LocalDataset& d) const {
    check_dim(d, dim_);
    return argmax_accuracy(logits(w, d.features), d.labels);
}

Eigen::VectorXd LogisticModel::sample_gradient_sq_norms(const Eigen::VectorXd& w, const LocalDataset& d) const {
    // g_s = r_s x~_s^T + l2 W, so ||g_s||^2 = ||r_s||^2 ||x~_s||^2 + 2 l2 r_s.z_s + l2^2 ||W||^2.
    check_dim(d, dim_);
    const Eigen::MatrixXd z = logits(w, d.features);
    Eigen::MatrixXd r = softmax_rows(z);
    for (long s = 0; s < d.size(); ++s) r(s, d.labels(s)) -= 1.0;
    const Eigen::VectorXd xsq = d.features.rowwise().squaredNorm().array() + 1.0;
    return (r.rowwise().squaredNorm().array() * xsq.array() + 2.0 * l2_ * (r.array() * z.array()).rowwise().sum() +
            l2_ * l2_ * w.squaredNorm())
        .matrix();
}

double LogisticModel::mixed_norm_sq(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) const {
    // Per-sample gradient g = r x~^T with r = p - e_y. For a feature perturbation dx:
    //   dg = (S V dx) x~^T + r dx~^T,  S = diag(p) - p p^T,  V = W without the bias column.
    // The adjoint maps U (classes x (dim+1)) to V^T S U x~ + U_{:, :dim}^T r.
    Eigen::Map<const Eigen::MatrixXd> W(w.data(), classes_, dim_ + 1);
    const auto V = W.leftCols(dim_);
    Eigen::VectorXd z = V * x + W.col(dim_);
    Eigen::VectorXd p = (z.array() - z.maxCoeff()).exp();
    p /= p.sum();
    Eigen::MatrixXd S = -p * p.transpose();
    S.diagonal() += p;
    Eigen::VectorXd r = p;
    r(y) -= 1.0;
    Eigen::VectorXd xt(dim_ + 1);
    xt << x, 1.0;

    auto jvp = [&](const Eigen::VectorXd& dx) {
        Eigen::MatrixXd dg = (S * (V * dx)) * xt.transpose();
        dg.leftCols(dim_) += r * dx.transpose();
        return dg;
    };
    auto vjp = [&](const Eigen::MatrixXd& U) -> Eigen::VectorXd {
        return V.transpose() * (S * (U * xt)) + U.leftCols(dim_).transpose() * r;
    };
    // Power iteration on J^T J from a fixed start vector.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(dim_) / std::sqrt(static_cast<double>(dim_));
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd u = vjp(jvp(v));
        const double next = v.dot(u);
        const double n = u.norm();
        if (n == 0.0) return 0.0;
        v = u / n;
        if (std::abs(next - lambda) <= 1e-10 * std::max(1.0, next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

double LogisticModel::smoothness_bound(const LocalDataset& d) const {
    check_dim(d, dim_);
    Eigen::MatrixXd xt(d.size(), dim_ + 1);
    xt.leftCols(dim_) = d.features;
    xt.col(dim_).setOnes();
    const Eigen::MatrixXd gram = xt.transpose() * xt / static_cast<double>(d.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().maxCoeff() + l2_;
}

// Tiny MLP

TinyMlp::TinyMlp(long dim, int hidden, int classes, double l2) : dim_(dim), hidden_(hidden), classes_(classes), l2_(l2) {
    if (dim < 1) throw ValidationError("M", "must be >= 1");
    if (hidden < 1) throw ValidationError("hidden", "must be >= 1");
    if (classes < 2) throw ValidationError("classes", "mlp needs at least 2 classes");
    if (l2 < 0.0) throw ValidationError("l2", "must be nonnegative");
}

Eigen::VectorXd TinyMlp::initial(Rng& rng) const {
    Eigen::VectorXd w(num_params());
    const long n1 = hidden_ * (dim_ + 1);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(dim_));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (long k = 0; k < n1; ++k) w(k) = rng.normal(0.0, s1);
    for (long k = n1; k < w.size(); ++k) w(k) = rng.normal(0.0, s2);
    return w;
}

double TinyMlp::loss_and_gradient(const Eigen::VectorXd& w, const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                                  Eigen::VectorXd* grad) const {
    const long n1 = hidden_ * (dim_ + 1);
    Eigen::Map<const Eigen::MatrixXd> W1(w.data(), hidden_, dim_ + 1);
    Eigen::Map<const Eigen::MatrixXd> W2(w.data() + n1, classes_, hidden_ + 1);
    Eigen::MatrixXd pre = X * W1.leftCols(dim_).transpose();
    pre.rowwise() += W1.col(dim_).transpose();
    const Eigen::MatrixXd h = pre.cwiseMax(0.0);
    Eigen::MatrixXd z = h * W2.leftCols(hidden_).transpose();
    z.rowwise() += W2.col(hidden_).transpose();
    const double value = cross_entropy(z, y) + 0.5 * l2_ * w.squaredNorm();
    if (!grad) return value;

    const double n = static_cast<double>(X.rows());
    Eigen::MatrixXd dz = softmax_rows(z);
    for (long s = 0; s < X.rows(); ++s) dz(s, y(s)) -= 1.0;
    dz /= n;
    Eigen::MatrixXd g2(classes_, hidden_ + 1);
    g2.leftCols(hidden_) = dz.transpose() * h;
    g2.col(hidden_) = dz.colwise().sum().transpose();
    Eigen::MatrixXd dh = dz * W2.leftCols(hidden_);
    dh.array() *= (pre.array() > 0.0).cast<double>();
    Eigen::MatrixXd g1(hidden_, dim_ + 1);
    g1.leftCols(dim_) = dh.transpose() * X;
    g1.col(dim_) = dh.colwise().sum().transpose();

    grad->resize(num_params());
    grad->head(n1) = Eigen::Map<const Eigen::VectorXd>(g1.data(), g1.size());
    grad->tail(g2.size()) = Eigen::Map<const Eigen::VectorXd>(g2.data(), g2.size());
    *grad += l2_ * w;
    return value;
}

double TinyMlp::loss(const Eigen::VectorXd& w, const LocalDataset& d) const {
    check_dim(d, dim_);
    return loss_and_gradient(w, d.features, d.labels, nullptr);
}

Eigen::VectorXd TinyMlp::gradient(const Eigen::VectorXd& w, const LocalDataset& d) const {
    check_dim(d, dim_);
    Eigen::VectorXd g;
    loss_and_gradient(w, d.features, d.labels, &g);
    return g;
}

Eigen::VectorXd TinyMlp::sample_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) const {
    Eigen::VectorXd g;
    Eigen::VectorXi yy(1);
    yy(0) = y;
    loss_and_gradient(w, x.transpose(), yy, &g);
    return g;
}

double TinyMlp::accuracy(const Eigen::VectorXd& w, const LocalDataset& d) const {
    check_dim(d, dim_);
    const long n1 = hidden_ * (dim_ + 1);
    Eigen::Map<const Eigen::MatrixXd> W1(w.data(), hidden_, dim_ + 1);
    Eigen::Map<const Eigen::MatrixXd> W2(w.data() + n1, classes_, hidden_ + 1);
    Eigen::MatrixXd pre = d.features * W1.leftCols(dim_).transpose();
    pre.rowwise() += W1.col(dim_).transpose();
    Eigen::MatrixXd z = pre.cwiseMax(0.0) * W2.leftCols(hidden_).transpose();
    z.rowwise() += W2.col(hidden_).transpose();
    return argmax_accuracy(z, d.labels);
}

std::unique_ptr<Model> make_model(const ModelSpec& spec, long dim, int classes, const LearningConstants& c) {
    switch (spec.kind) {
        case ModelKind::kQuadratic: {
            Eigen::VectorXd a(dim);
            for (long j = 0; j < dim; ++j)
                a(j) = dim == 1 ? c.lipschitz
                                : c.strong_convexity + (c.lipschitz - c.strong_convexity) * static_cast<double>(j) /
                                                           static_cast<double>(dim - 1);
            return std::make_unique<QuadraticModel>(a);
        }
        case ModelKind::kLogistic:
            return std::make_unique<LogisticModel>(dim, classes, spec.l2);
        case ModelKind::kTinyMlp:
            return std::make_unique<TinyMlp>(dim, spec.hidden, classes, spec.l2);
    }
    throw ValidationError("model", "unknown model kind");
}

}  // namespace skyfed
