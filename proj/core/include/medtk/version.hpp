// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_VERSION_HPP
#define MEDTK_VERSION_HPP

namespace medtk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace medtk

#endif  // MEDTK_VERSION_HPP
