#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pfdiff::nn {

/// Ordered collection of named parameter tensors. Layers keep indices into
/// a store; a gradient store is a zero-filled copy with the same shapes.
class ParamStore {
  public:
    std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);

    std::size_t size() const { return tensors_.size(); }
    Eigen::MatrixXd& operator[](std::size_t i) { return tensors_[i]; }
    const Eigen::MatrixXd& operator[](std::size_t i) const { return tensors_[i]; }
    const std::string& name(std::size_t i) const { return names_[i]; }
    /// Index of the tensor called `name`; throws when absent.
    std::size_t find(const std::string& name) const;

    /// Total number of scalars across all tensors.
    std::size_t scalar_count() const;
    /// Scalar access in concatenated column-major order.
    double& scalar(std::size_t flat);
    double scalar(std::size_t flat) const;

    ParamStore zeros_like() const;
    void set_zero();
    bool same_shapes(const ParamStore& other) const;
    bool all_finite() const;

  private:
    std::vector<std::string> names_;
    std::vector<Eigen::MatrixXd> tensors_;
};

}  // namespace pfdiff::nn
