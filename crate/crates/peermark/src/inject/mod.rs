//! PDF prompt injection. (module under construction)
