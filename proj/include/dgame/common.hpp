/*
 Copyright 2026 The dgame Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef DGAME_COMMON_HPP_
#define DGAME_COMMON_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dgame {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

using PlayerIndex = std::size_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Linearization requested at a steering angle where tan() is singular.
class SingularLinearizationError : public Error {
 public:
  using Error::Error;
};

/// A rollout produced a non-finite state.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// The stacked Nash coupling system could not be solved at some timestep.
class IllConditionedGameError : public Error {
 public:
  IllConditionedGameError(const std::string& what, std::size_t timestep)
      : Error(what), timestep_(timestep) {}
  std::size_t timestep() const { return timestep_; }

 private:
  std::size_t timestep_;
};

class RegularizationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline bool all_finite(const Eigen::Ref<const MatrixXd>& m) {
  return m.allFinite();
}

inline void require_dim(Eigen::Index got, Eigen::Index want,
                        const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " +
                         std::to_string(want) + ", got " +
                         std::to_string(got));
  }
}

}  // namespace detail

}  // namespace dgame

#endif  // DGAME_COMMON_HPP_
