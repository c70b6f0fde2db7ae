// Copyright 2026 The GWI Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace gwi {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GWI_DEFINE_ERROR(NAME)                  \
  class NAME : public Error {                   \
   public:                                      \
    using Error::Error;                         \
  }

GWI_DEFINE_ERROR(DimensionMismatch);
GWI_DEFINE_ERROR(ShapeMismatch);
GWI_DEFINE_ERROR(LengthMismatch);
GWI_DEFINE_ERROR(NotPositiveDefinite);
GWI_DEFINE_ERROR(ConvergenceFailure);
GWI_DEFINE_ERROR(InvalidArgument);
GWI_DEFINE_ERROR(InvalidVariance);
GWI_DEFINE_ERROR(NonPositiveNoise);
GWI_DEFINE_ERROR(InvalidLabels);
GWI_DEFINE_ERROR(ParseError);
GWI_DEFINE_ERROR(EmptyFile);
GWI_DEFINE_ERROR(DegenerateSplit);
GWI_DEFINE_ERROR(EmptyValidation);
GWI_DEFINE_ERROR(EmptyInput);
GWI_DEFINE_ERROR(IncompatibleCheckpoint);
GWI_DEFINE_ERROR(NonFiniteLoss);

#undef GWI_DEFINE_ERROR

}  // namespace gwi
