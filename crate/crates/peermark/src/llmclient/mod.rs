//! LLM provider client. (module under construction)
