// Copyright 2026 The hopqa Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

#include "hopqa/composition.hpp"
#include "hopqa/corpus.hpp"
#include "hopqa/error.hpp"
#include "hopqa/index.hpp"
#include "hopqa/index_io.hpp"
#include "hopqa/qa_eval.hpp"
#include "hopqa/ranked_fact.hpp"
#include "hopqa/rerank.hpp"
#include "hopqa/retrieval.hpp"
#include "hopqa/text.hpp"
