//! Holds no code. The acceptance criteria live in `tests/acceptance.rs`
//! and run with `cargo test -p stnbt-verify`.
