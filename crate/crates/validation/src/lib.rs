//! Holds the `acceptance` test target only; run it with
//! `cargo test -p photoconv-validation --test acceptance`.
