#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "lnmt/common.hpp"

namespace lnmt {

struct TensorSpec {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index offset = 0;

  Eigen::Index size() const { return rows * cols; }
};

// Named tensors backed by one contiguous flat vector. The flat view is what
// the optimizer, the EMA update, checkpointing and finite differences operate
// on; named views are what forward/backward use. Column-major like Eigen.
class ParamStore {
 public:
  int add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    if (finalized_) throw Error("ParamStore: add after finalize");
    if (index_.count(name)) throw Error("ParamStore: duplicate tensor name " + name);
    TensorSpec spec{name, rows, cols, next_offset_};
    next_offset_ += spec.size();
    index_[name] = static_cast<int>(specs_.size());
    specs_.push_back(spec);
    return static_cast<int>(specs_.size()) - 1;
  }

  void finalize() {
    data_ = Vec::Zero(next_offset_);
    finalized_ = true;
  }

  bool finalized() const { return finalized_; }
  Eigen::Index size() const { return next_offset_; }
  const std::vector<TensorSpec>& specs() const { return specs_; }

  const TensorSpec& spec(int handle) const { return specs_.at(static_cast<std::size_t>(handle)); }

  int handle(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("ParamStore: unknown tensor " + name);
    return it->second;
  }

  Eigen::Map<Mat> tensor(int handle) {
    const TensorSpec& s = spec(handle);
    return Eigen::Map<Mat>(data_.data() + s.offset, s.rows, s.cols);
  }
  Eigen::Map<const Mat> tensor(int handle) const {
    const TensorSpec& s = spec(handle);
    return Eigen::Map<const Mat>(data_.data() + s.offset, s.rows, s.cols);
  }
  Eigen::Map<Mat> tensor(const std::string& name) { return tensor(handle(name)); }
  Eigen::Map<const Mat> tensor(const std::string& name) const { return tensor(handle(name)); }

  /// View of `spec(handle)` inside an external flat buffer (e.g. a gradient).
  Eigen::Map<Mat> view(Vec& buf, int handle) const {
    const TensorSpec& s = spec(handle);
    return Eigen::Map<Mat>(buf.data() + s.offset, s.rows, s.cols);
  }
  Eigen::Map<const Mat> view(const Vec& buf, int handle) const {
    const TensorSpec& s = spec(handle);
    return Eigen::Map<const Mat>(buf.data() + s.offset, s.rows, s.cols);
  }

  Vec& flat() { return data_; }
  const Vec& flat() const { return data_; }

  /// Name of the tensor owning a flat index (for error messages).
  std::string name_at(Eigen::Index flat_index) const {
    for (const auto& s : specs_) {
      if (flat_index >= s.offset && flat_index < s.offset + s.size()) return s.name;
    }
    return "<out of range>";
  }

  bool same_layout(const ParamStore& other) const {
    if (specs_.size() != other.specs_.size()) return false;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const auto& a = specs_[i];
      const auto& b = other.specs_[i];
      if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
    }
    return true;
  }

 private:
  std::vector<TensorSpec> specs_;
  std::unordered_map<std::string, int> index_;
  Vec data_;
  Eigen::Index next_offset_ = 0;
  bool finalized_ = false;
};

}  // namespace lnmt
