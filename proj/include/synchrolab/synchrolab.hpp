#pragma once

#include "synchrolab/dataset.hpp"
#include "synchrolab/decompose.hpp"
#include "synchrolab/dtw.hpp"
#include "synchrolab/error.hpp"
#include "synchrolab/manifest.hpp"
#include "synchrolab/pipeline.hpp"
#include "synchrolab/preprocess.hpp"
#include "synchrolab/processing.hpp"
#include "synchrolab/stats.hpp"
#include "synchrolab/synchrony.hpp"
#include "synchrolab/synthgen.hpp"
#include "synchrolab/vizmap.hpp"
