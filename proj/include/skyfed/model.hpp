#pragma once

#include "skyfed/dataset.hpp"
#include "skyfed/scenario.hpp"

#include <Eigen/Core>

#include <memory>

namespace skyfed {

/// Per-sample loss f(w, x, y); dataset losses are sample means.
class Model {
public:
    virtual ~Model() = default;

    virtual ModelKind kind() const = 0;
    virtual long num_params() const = 0;
    /// Starting weights: zero for the convex models, small random values for the MLP.
    virtual Eigen::VectorXd initial(Rng& rng) const;

    virtual double loss(const Eigen::VectorXd& w, const LocalDataset& d) const = 0;
    virtual Eigen::VectorXd gradient(const Eigen::VectorXd& w, const LocalDataset& d) const = 0;
    virtual Eigen::VectorXd sample_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) const = 0;
    /// Fraction of rows classified correctly; NaN for models without labels.
    virtual double accuracy(const Eigen::VectorXd& w, const LocalDataset& d) const;
    /// ||grad f(w, x_s, y_s)||^2 for every row s.
    virtual Eigen::VectorXd sample_gradient_sq_norms(const Eigen::VectorXd& w, const LocalDataset& d) const;

    /// ||d^2 f / dw dx||^2 (largest eigenvalue of J^T J) at one sample. Throws for nonconvex models.
    virtual double mixed_norm_sq(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) const;
};

/// f = 1/2 (w - x)^T diag(a) (w - x). Labels are ignored; the gradient is linear in x,
/// so the Hessian is diag(a) and the mixed Hessian is -diag(a) everywhere.
class QuadraticModel : public Model {
public:
    explicit QuadraticModel(Eigen::VectorXd curvature);

    ModelKind kind() const override { return ModelKind::kQuadratic; }
    long num_params() const override { return curvature_.size(); }
    double loss(const Eigen::VectorXd& w, const LocalDataset& d) const override;
    Eigen::VectorXd gradient(const Eigen::VectorXd& w, const LocalDataset& d) const override;
    Eigen::VectorXd sample_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) const override;
    Eigen::VectorXd sample_gradient_sq_norms(const Eigen::VectorXd& w, const LocalDataset& d) const override;
    double mixed_norm_sq(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) const override;

    const Eigen::VectorXd& curvature() const { return curvature_; }
    /// Minimizer of the mean loss over `d`: the feature mean.
    Eigen::VectorXd minimizer(const LocalDataset& d) const;

private:
    Eigen::VectorXd curvature_;
};

/// Multinomial logistic regression with bias and L2 penalty l2/2 ||w||^2.
/// Weights are a classes x (dim + 1) matrix stored column-major.
class LogisticModel : public Model {
public:
    LogisticModel(long dim, int classes, double l2);

    ModelKind kind() const override { return ModelKind::kLogistic; }
    long num_params() const override { return classes_ * (dim_ + 1); }
    double loss(const Eigen::VectorXd& w, const LocalDataset& d) const override;
    Eigen::VectorXd gradient(const Eigen::VectorXd& w, const LocalDataset& d) const override;
    Eigen::VectorXd sample_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) const override;
    double accuracy(const Eigen::VectorXd& w, const LocalDataset& d) const override;
    Eigen::VectorXd sample_gradient_sq_norms(const Eigen::VectorXd& w, const LocalDataset& d) const override;
    double mixed_norm_sq(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) const override;

    double l2() const { return l2_; }
    /// Hessian bound 1/2 lambda_max(X~^T X~ / n) + l2, X~ with the bias column.
    double smoothness_bound(const LocalDataset& d) const;

private:
    Eigen::MatrixXd logits(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const;

    long dim_;
    int classes_;
    double l2_;
};

/// One ReLU hidden layer and a softmax output, with the same L2 penalty. Nonconvex.
class TinyMlp : public Model {
public:
    TinyMlp(long dim, int hidden, int classes, double l2);

    ModelKind kind() const override { return ModelKind::kTinyMlp; }
    long num_params() const override { return hidden_ * (dim_ + 1) + classes_ * (hidden_ + 1); }
    Eigen::VectorXd initial(Rng& rng) const override;
    double loss(const Eigen::VectorXd& w, const LocalDataset& d) const override;
    Eigen::VectorXd gradient(const Eigen::VectorXd& w, const LocalDataset& d) const override;
    Eigen::VectorXd sample_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) const override;
    double accuracy(const Eigen::VectorXd& w, const LocalDataset& d) const override;

private:
    double loss_and_gradient(const Eigen::VectorXd& w, const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                             Eigen::VectorXd* grad) const;

    long dim_;
    int hidden_;
    int classes_;
    double l2_;
};

/// Builds the scenario's model. The quadratic curvature spreads evenly over [mu, L]
/// so its extreme Hessian eigenvalues are exactly the scenario's constants.
std::unique_ptr<Model> make_model(const ModelSpec& spec, long dim, int classes, const LearningConstants& constants);

}  // namespace skyfed
