//! Holds the `acceptance` test target. It lives in its own package so a
//! failing criterion never stops the rest of the workspace tests from running.
