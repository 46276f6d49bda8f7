// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "fastdoc/data/corpus.hpp"
#include "fastdoc/data/derive_taxonomy.hpp"
#include "fastdoc/data/document.hpp"
#include "fastdoc/data/miners.hpp"
#include "fastdoc/data/rouge.hpp"
#include "fastdoc/data/synthetic.hpp"
#include "fastdoc/data/taxonomy.hpp"
#include "fastdoc/data/tfidf.hpp"
#include "fastdoc/encoder/model.hpp"
#include "fastdoc/encoder/modules.hpp"
#include "fastdoc/encoder/text.hpp"
#include "fastdoc/errors.hpp"
#include "fastdoc/eval/analysis.hpp"
#include "fastdoc/eval/finetune.hpp"
#include "fastdoc/eval/metrics.hpp"
#include "fastdoc/eval/tasks.hpp"
#include "fastdoc/io.hpp"
#include "fastdoc/log.hpp"
#include "fastdoc/losses.hpp"
#include "fastdoc/numcore/ops.hpp"
#include "fastdoc/numcore/optim.hpp"
#include "fastdoc/numcore/random.hpp"
#include "fastdoc/numcore/tensor.hpp"
#include "fastdoc/train/checkpoint.hpp"
#include "fastdoc/train/drift.hpp"
#include "fastdoc/train/mlm.hpp"
#include "fastdoc/train/pretrain.hpp"
