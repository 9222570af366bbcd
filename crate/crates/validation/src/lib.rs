//! Holds the `acceptance` test target; run it with
//! `cargo test -p cqed-validation --test acceptance`.
