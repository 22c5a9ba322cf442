// Copyright 2026 the trajsim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRAJSIM_TYPES_HPP
#define TRAJSIM_TYPES_HPP

#include <Eigen/Dense>

namespace trajsim {

// Row = one sample/chain/patient throughout; row-major keeps a row contiguous.
using MatRX = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatRXu8 = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using VectorXu8 = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

}  // namespace trajsim

#endif  // TRAJSIM_TYPES_HPP
