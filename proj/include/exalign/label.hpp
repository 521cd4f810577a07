#pragma once

namespace exalign {

enum class Label { non_paraphrase = 0, paraphrase = 1 };

}  // namespace exalign
