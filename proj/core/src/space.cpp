#include "rhoest/space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace rhoest {

std::shared_ptr<const SampleSpace> SampleSpace::discrete(
    std::vector<double> atoms) {
  if (atoms.empty()) throw std::invalid_argument("discrete space: no atoms");
  std::set<double> uniq(atoms.begin(), atoms.end());
  if (uniq.size() != atoms.size())
    throw std::invalid_argument("discrete space: atoms must be distinct");
  auto s = std::shared_ptr<SampleSpace>(new SampleSpace());
  s->kind_ = Kind::discrete;
  s->atoms_ = std::move(atoms);
  return s;
}

std::shared_ptr<const SampleSpace> SampleSpace::continuous1d(
    double support_lo, double support_hi, QuadratureSpec quad) {
  if (!(support_lo < support_hi))
    throw std::invalid_argument("continuous1d: empty support");
  if (!(quad.lo < quad.hi) || !std::isfinite(quad.lo) || !std::isfinite(quad.hi))
    throw std::invalid_argument("continuous1d: quadrature window must be finite");
  if (quad.nodes_per_panel < 2)
    throw std::invalid_argument("continuous1d: nodes_per_panel too small");
  auto s = std::shared_ptr<SampleSpace>(new SampleSpace());
  s->kind_ = Kind::continuous1d;
  s->support_lo_ = support_lo;
  s->support_hi_ = support_hi;
  s->quad_ = std::move(quad);
  return s;
}

std::shared_ptr<const SampleSpace> SampleSpace::product(
    std::shared_ptr<const SampleSpace> base, int arity) {
  if (!base) throw std::invalid_argument("product space: null base");
  if (base->kind() == Kind::product)
    throw std::invalid_argument("product space: base must not be a product");
  if (arity < 1) throw std::invalid_argument("product space: arity must be >= 1");
  auto s = std::shared_ptr<SampleSpace>(new SampleSpace());
  s->kind_ = Kind::product;
  s->base_ = std::move(base);
  s->arity_ = arity;
  return s;
}

int SampleSpace::point_dim() const {
  return kind_ == Kind::product ? arity_ : 1;
}

std::string SampleSpace::reference_measure_id() const {
  switch (kind_) {
    case Kind::discrete:
      return "counting";
    case Kind::continuous1d:
      return "lebesgue";
    case Kind::product:
      return base_->reference_measure_id();
  }
  return {};
}

bool SampleSpace::contains(std::span<const double> point) const {
  switch (kind_) {
    case Kind::discrete:
      return point.size() == 1 &&
             std::find(atoms_.begin(), atoms_.end(), point[0]) != atoms_.end();
    case Kind::continuous1d:
      return point.size() == 1 && point[0] >= support_lo_ &&
             point[0] <= support_hi_;
    case Kind::product: {
      if (point.size() != static_cast<std::size_t>(arity_)) return false;
      for (double x : point)
        if (!base_->contains({&x, 1})) return false;
      return true;
    }
  }
  return false;
}

bool SampleSpace::same_as(const SampleSpace& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case Kind::discrete:
      return atoms_ == other.atoms_;
    case Kind::continuous1d:
      return support_lo_ == other.support_lo_ &&
             support_hi_ == other.support_hi_ && quad_ == other.quad_;
    case Kind::product:
      return arity_ == other.arity_ && base_->same_as(*other.base_);
  }
  return false;
}

Sample::Sample(std::shared_ptr<const SampleSpace> sp, std::vector<double> data)
    : space(std::move(sp)), flat(std::move(data)) {
  const std::size_t d = static_cast<std::size_t>(space->point_dim());
  if (flat.empty() || flat.size() % d != 0)
    throw std::invalid_argument("sample: data size not a multiple of point dim");
  n = flat.size() / d;
  for (std::size_t i = 0; i < n; ++i) {
    if (!space->contains(point(i)))
      throw std::invalid_argument("sample: point outside space support");
  }
}

}  // namespace rhoest
