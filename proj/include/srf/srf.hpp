#pragma once

#include "srf/agreement.hpp"
#include "srf/concept_graph.hpp"
#include "srf/corpus.hpp"
#include "srf/embedding.hpp"
#include "srf/error.hpp"
#include "srf/labeling.hpp"
#include "srf/lexicon.hpp"
#include "srf/optics.hpp"
#include "srf/pipeline.hpp"
#include "srf/relatedness.hpp"
#include "srf/retrofit.hpp"
#include "srf/text.hpp"
