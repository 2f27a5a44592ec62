// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include <json.hpp>

#include "npbg/scene.hpp"

namespace npbg::detail {

// Scene-file camera schema: width, height, fx, fy, cx, cy, R (9, row-major),
// t (3), optional image. Validates the result.
CameraView camera_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir, bool load_image,
                            int index = -1);
nlohmann::json camera_to_json(const CameraView& camera);

}  // namespace npbg::detail
