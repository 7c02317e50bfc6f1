/*
 * vsyn - streaming video synopsis and forensic analytics
 *
 * Licensed under the terms of the Apache 2.0 License.
 * See LICENSE file in the project root for terms.
 */
#pragma once

#include "vsyn/bgmodel.hpp"
#include "vsyn/config.hpp"
#include "vsyn/core.hpp"
#include "vsyn/eval.hpp"
#include "vsyn/flow.hpp"
#include "vsyn/forensics.hpp"
#include "vsyn/regions.hpp"
#include "vsyn/synopsis.hpp"
#include "vsyn/synthgen.hpp"
#include "vsyn/tracker.hpp"
#include "vsyn/video_io.hpp"
