#pragma once

#include "beachseg/annotation.hpp"
#include "beachseg/config.hpp"
#include "beachseg/dataset.hpp"
#include "beachseg/error.hpp"
#include "beachseg/exif.hpp"
#include "beachseg/geometry.hpp"
#include "beachseg/gradient_check.hpp"
#include "beachseg/image_io.hpp"
#include "beachseg/imaging.hpp"
#include "beachseg/losses.hpp"
#include "beachseg/metrics.hpp"
#include "beachseg/panoptic.hpp"
#include "beachseg/parallel.hpp"
#include "beachseg/raster.hpp"
#include "beachseg/staging.hpp"
#include "beachseg/text_format.hpp"
#include "beachseg/tiler.hpp"
