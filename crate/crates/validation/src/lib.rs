//! Holds the `acceptance` test target (`cargo test -p spellmap-validation --test acceptance`).
