#include "pfdiff/nn/param_store.h"

#include "pfdiff/common/error.h"

namespace pfdiff::nn {

std::size_t ParamStore::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    for (const auto& n : names_)
        if (n == name) throw ValidationError("duplicate parameter name " + name);
    names_.push_back(std::move(name));
    tensors_.push_back(Eigen::MatrixXd::Zero(rows, cols));
    return tensors_.size() - 1;
}

std::size_t ParamStore::find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    throw ValidationError("unknown parameter " + name);
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<std::size_t>(t.size());
    return n;
}

double& ParamStore::scalar(std::size_t flat) {
    for (auto& t : tensors_) {
        if (flat < static_cast<std::size_t>(t.size())) return t.data()[flat];
        flat -= static_cast<std::size_t>(t.size());
    }
    throw DimensionError("parameter index out of range");
}

double ParamStore::scalar(std::size_t flat) const { return const_cast<ParamStore*>(this)->scalar(flat); }

ParamStore ParamStore::zeros_like() const {
    ParamStore out;
    out.names_ = names_;
    for (const auto& t : tensors_) out.tensors_.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
    return out;
}

void ParamStore::set_zero() {
    for (auto& t : tensors_) t.setZero();
}

bool ParamStore::same_shapes(const ParamStore& other) const {
    if (other.tensors_.size() != tensors_.size()) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i)
        if (tensors_[i].rows() != other.tensors_[i].rows() || tensors_[i].cols() != other.tensors_[i].cols())
            return false;
    return true;
}

bool ParamStore::all_finite() const {
    for (const auto& t : tensors_)
        if (!t.allFinite()) return false;
    return true;
}

}  // namespace pfdiff::nn
