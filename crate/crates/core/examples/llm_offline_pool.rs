//! Annotate samples with every (model, prompt) pair, then rank the pool.
//!
//! Uses a canned transport in place of a chat-completion endpoint, with an
//! on-disk cache: the second pass is served entirely from the cache.
//! Swap in `HttpTransport` to talk to a real server.

use targetspan::corpus::SampleRecord;
use targetspan::llm::{run_pool, Annotator, ChatTransport, ModelConfig, PromptTemplate, ResponseCache, TransportError};
use targetspan::metrics::MatchMode;
use targetspan::pooling::rank_pool;

struct Canned;

impl ChatTransport for Canned {
    fn complete(&self, config: &ModelConfig, prompt: &str) -> Result<String, TransportError> {
        let strong = config.model == "model-a";
        Ok(if prompt.ends_with("purple person left early") {
            if strong {
                "\"horrible purple person\""
            } else {
                "\"purple person\""
            }
        } else if strong {
            "\"piano brains\"\n\"songwriters\""
        } else {
            "\"Piano\""
        }
        .to_string())
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples = [
        SampleRecord::new("s1", "those piano brains never stop whining about songwriters", vec![(6, 18), (44, 55)]),
        SampleRecord::new("s2", "the horrible purple person left early", vec![(4, 26)]),
    ];
    let configs = ["model-a", "model-b"].map(|m| ModelConfig::new("http://localhost:8000/v1", m));
    let prompts = PromptTemplate::builtin();
    let cache_dir = std::env::temp_dir().join(format!("targetspan-example-{}", std::process::id()));

    for pass in 1..=2 {
        let annotator = Annotator::new(Canned, Some(ResponseCache::open(&cache_dir)?));
        let run = run_pool(&annotator, &samples, &prompts, &configs, 4)?;
        println!("pass {pass}: {} responses, {} from cache", run.attempted, run.cache_hits());
        if pass == 2 {
            rank_pool(&run.pool, MatchMode::Strict)?.write_tsv(std::io::stdout().lock())?;
        }
    }
    std::fs::remove_dir_all(&cache_dir)?;
    Ok(())
}
