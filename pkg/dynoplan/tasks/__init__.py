# Tasks module - chain benchmark and assembly surrogate
