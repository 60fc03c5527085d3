//! Half-line truncation diagnostics. (module under construction)
