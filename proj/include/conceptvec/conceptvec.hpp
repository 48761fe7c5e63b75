#pragma once

#include "conceptvec/boc.hpp"
#include "conceptvec/common.hpp"
#include "conceptvec/corpus.hpp"
#include "conceptvec/densify.hpp"
#include "conceptvec/embedding.hpp"
#include "conceptvec/eval.hpp"
#include "conceptvec/hungarian.hpp"
#include "conceptvec/trainer.hpp"
#include "conceptvec/vocabulary.hpp"
