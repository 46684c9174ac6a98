//! Holds the `acceptance` test target, which runs the football configuration at N = 256
//! twice and prints one line per criterion. It lives in its own package so that the
//! other test targets of the workspace run before it.
