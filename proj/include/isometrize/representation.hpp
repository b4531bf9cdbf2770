#pragma once

// Finite-dimensional representations given by generator images, with a
// fixed normal form for word evaluation:
//   lattices:    pi(e1)^c1 ... pi(ed)^cd
//   heisenberg3: (a,b,c) = x^a y^b z^(c-ab), so pi(x)^a pi(y)^b pi(z)^(c-ab)
//   finite:      the stored image of each element

#include <map>
#include <string>
#include <vector>

#include "isometrize/folner.hpp"
#include "isometrize/operator_core.hpp"

namespace isometrize {

struct RepTolerances {
  double homomorphism = 1e-10;
  double inverse = 1e-10;
};

class Representation {
 public:
  /// `images` must hold exactly the descriptor's generator names. Inverse
  /// images are computed for groups, or checked when supplied.
  Representation(GroupDescriptor descriptor, std::map<std::string, ComplexMatrix> images,
                 std::map<std::string, ComplexMatrix> inverse_images = {}, RepTolerances tol = {})
      : Representation(std::move(descriptor), std::move(images), std::move(inverse_images), tol, true) {}

  /// Skips the relation checks; word evaluation still follows the normal form.
  static Representation unchecked(GroupDescriptor descriptor, std::map<std::string, ComplexMatrix> images) {
    return Representation(std::move(descriptor), std::move(images), {}, RepTolerances{}, false);
  }

 private:
  Representation(GroupDescriptor descriptor, std::map<std::string, ComplexMatrix> images,
                 std::map<std::string, ComplexMatrix> inverse_images, RepTolerances tol, bool check)
      : descriptor_(std::move(descriptor)) {
    const auto& gens = descriptor_.generators();
    if (images.size() != gens.size())
      throw Error(ErrorCode::SchemaError, "expected " + std::to_string(gens.size()) + " generator images for " +
                                              descriptor_.name() + ", got " + std::to_string(images.size()));
    for (const Generator& g : gens) {
      auto it = images.find(g.name);
      if (it == images.end()) throw Error(ErrorCode::SchemaError, "missing image for generator " + g.name);
      require_square(it->second, ("image of " + g.name).c_str());
      if (!all_finite(it->second)) throw Error(ErrorCode::NonFinite, "image of " + g.name + " is not finite");
      if (dim_ == 0) dim_ = it->second.rows();
      if (it->second.rows() != dim_)
        throw Error(ErrorCode::DimensionMismatch, "image of " + g.name + " has dimension " +
                                                      std::to_string(it->second.rows()) + ", expected " +
                                                      std::to_string(dim_));
      images_.push_back(it->second);
    }
    if (descriptor_.is_group()) {
      for (std::size_t i = 0; i < gens.size(); ++i) {
        auto it = inverse_images.find(gens[i].name);
        if (it != inverse_images.end()) {
          double err = op_norm(images_[i] * it->second - identity(dim_));
          if (err > tol.inverse)
            throw Error(ErrorCode::InvalidArgument, "inverse image of " + gens[i].name + " is off by " +
                                                        std::to_string(err));
          inverses_.push_back(it->second);
        } else {
          inverses_.push_back(checked_inverse(images_[i]));
        }
      }
    }
    if (check) validate(tol.homomorphism);
  }

 public:
  const GroupDescriptor& descriptor() const noexcept { return descriptor_; }
  Eigen::Index dim() const noexcept { return dim_; }
  std::size_t generator_count() const noexcept { return images_.size(); }
  const std::string& generator_name(std::size_t i) const { return descriptor_.generators()[i].name; }
  const Element& generator_element(std::size_t i) const { return descriptor_.generators()[i].element; }
  const ComplexMatrix& image(std::size_t i) const { return images_[i]; }
  /// Throws NotApplicable for semigroups.
  const ComplexMatrix& inverse_image(std::size_t i) const {
    if (inverses_.empty()) throw Error(ErrorCode::NotApplicable, descriptor_.name() + " has no inverses");
    return inverses_[i];
  }
  const ComplexMatrix& image(const std::string& name) const { return images_[index_of(name)]; }

  std::size_t index_of(const std::string& name) const {
    const auto& gens = descriptor_.generators();
    for (std::size_t i = 0; i < gens.size(); ++i)
      if (gens[i].name == name) return i;
    throw Error(ErrorCode::InvalidArgument, "unknown generator " + name);
  }

  std::map<std::string, ComplexMatrix> images_by_name() const {
    std::map<std::string, ComplexMatrix> out;
    for (std::size_t i = 0; i < images_.size(); ++i) out.emplace(generator_name(i), images_[i]);
    return out;
  }

 private:
  void validate(double tol) const {
    auto close = [&](const ComplexMatrix& a, const ComplexMatrix& b, double scale) {
      return op_norm(a - b) <= tol * std::max(1.0, scale);
    };
    switch (descriptor_.family()) {
      case GroupFamily::IntLattice:
      case GroupFamily::NatLattice:
        for (std::size_t i = 0; i < images_.size(); ++i)
          for (std::size_t j = i + 1; j < images_.size(); ++j) {
            const ComplexMatrix& a = images_[i];
            const ComplexMatrix& b = images_[j];
            if (!close(a * b, b * a, op_norm(a) * op_norm(b)))
              throw Error(ErrorCode::InvalidArgument,
                          "images of " + generator_name(i) + " and " + generator_name(j) + " do not commute");
          }
        break;
      case GroupFamily::Heisenberg3: {
        const ComplexMatrix& x = images_[0];
        const ComplexMatrix& y = images_[1];
        const ComplexMatrix& z = images_[2];
        double nx = op_norm(x), ny = op_norm(y), nz = op_norm(z);
        if (!close(x * y, y * x * z, nx * ny * std::max(1.0, nz)))
          throw Error(ErrorCode::InvalidArgument, "heisenberg relation xy = yxz fails");
        if (!close(x * z, z * x, nx * nz) || !close(y * z, z * y, ny * nz))
          throw Error(ErrorCode::InvalidArgument, "image of z is not central");
        break;
      }
      case GroupFamily::FiniteGroupTable: {
        const std::size_t n = images_.size();
        Element e = descriptor_.identity();
        if (!close(images_[static_cast<std::size_t>(e.c[0])], identity(dim_), 1.0))
          throw Error(ErrorCode::InvalidArgument, "identity element is not represented by I");
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b) {
            Element ab = descriptor_.multiply(Element{{static_cast<std::int64_t>(a), 0, 0, 0}},
                                              Element{{static_cast<std::int64_t>(b), 0, 0, 0}});
            const ComplexMatrix& lhs = images_[static_cast<std::size_t>(ab.c[0])];
            if (!close(images_[a] * images_[b], lhs, op_norm(images_[a]) * op_norm(images_[b])))
              throw Error(ErrorCode::InvalidArgument, "multiplication table not respected at (" + std::to_string(a) +
                                                          "," + std::to_string(b) + ")");
          }
        break;
      }
    }
  }

  GroupDescriptor descriptor_;
  Eigen::Index dim_ = 0;
  std::vector<ComplexMatrix> images_;
  std::vector<ComplexMatrix> inverses_;
};

/// Evaluates pi(g) with cached generator powers. Not thread-safe; use one
/// evaluator per thread.
class RepEvaluator {
 public:
  explicit RepEvaluator(const Representation& rep) : rep_(&rep), positive_(rep.generator_count()),
                                                      negative_(rep.generator_count()) {
    for (std::size_t i = 0; i < rep.generator_count(); ++i) {
      positive_[i].push_back(identity(rep.dim()));
      negative_[i].push_back(identity(rep.dim()));
    }
  }

  const Representation& rep() const noexcept { return *rep_; }

  /// pi(s_i)^k, negative k through the inverse image.
  const ComplexMatrix& power(std::size_t i, std::int64_t k) {
    if (k < 0 && !rep_->descriptor().is_group())
      throw Error(ErrorCode::OutOfDomain, "negative power in a semigroup");
    auto& table = k >= 0 ? positive_[i] : negative_[i];
    std::size_t want = static_cast<std::size_t>(k >= 0 ? k : -k);
    while (table.size() <= want)
      table.push_back(table.back() * (k >= 0 ? rep_->image(i) : rep_->inverse_image(i)));
    return table[want];
  }

  ComplexMatrix operator()(const Element& g) {
    const GroupDescriptor& d = rep_->descriptor();
    d.require_domain(g);
    switch (d.family()) {
      case GroupFamily::IntLattice:
      case GroupFamily::NatLattice: {
        ComplexMatrix out = power(0, g.c[0]);
        for (int i = 1; i < d.arity(); ++i) out = out * power(static_cast<std::size_t>(i), g.c[i]);
        return out;
      }
      case GroupFamily::Heisenberg3:
        return power(0, g.c[0]) * power(1, g.c[1]) * power(2, g.c[2] - g.c[0] * g.c[1]);
      case GroupFamily::FiniteGroupTable:
        return rep_->image(static_cast<std::size_t>(g.c[0]));
    }
    return identity(rep_->dim());
  }

 private:
  const Representation* rep_;
  std::vector<std::vector<ComplexMatrix>> positive_;
  std::vector<std::vector<ComplexMatrix>> negative_;
};

inline ComplexMatrix rep_eval(const Representation& rep, const Element& g) {
  RepEvaluator eval(rep);
  return eval(g);
}

/// All elements expressible as words of length <= max_len in the generators
/// (and their inverses for groups), identity included, deduplicated.
inline std::vector<Element> short_words(const GroupDescriptor& d, int max_len) {
  std::vector<Element> letters;
  for (const Generator& g : d.generators()) {
    letters.push_back(g.element);
    if (d.is_group()) letters.push_back(d.inverse(g.element));
  }
  std::vector<Element> out{d.identity()};
  ElementSet seen{d.identity()};
  std::vector<Element> frontier = out;
  for (int len = 1; len <= max_len; ++len) {
    std::vector<Element> next;
    for (const Element& w : frontier)
      for (const Element& l : letters) {
        Element v = d.multiply(w, l);
        if (seen.insert(v).second) {
          out.push_back(v);
          next.push_back(v);
        }
      }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace isometrize
