// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "mirrorflow/geometry.hpp"

namespace mf {

// Time-dependent drift of the transport ODE dZ_t = v(Z_t, t) dt.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual int dim() const = 0;
  // Row-wise evaluation: out.row(i) = v(Z.row(i), t).
  virtual void eval(const Mat& Z, double t, Mat& out) const = 0;

  Vec eval_point(const Vec& z, double t) const;
};

class ZeroVelocity final : public VelocityField {
 public:
  explicit ZeroVelocity(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  void eval(const Mat& Z, double, Mat& out) const override {
    out.setZero(Z.rows(), Z.cols());
  }

 private:
  int dim_;
};

}  // namespace mf
