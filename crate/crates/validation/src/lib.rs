//! Acceptance suite for `wavescope`; see `tests/acceptance.rs`.
