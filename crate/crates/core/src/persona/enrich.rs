use super::{parse_profile, PersonaError, PersonaProfile, PersonaSeed};
use crate::llm::{ChatBackend, ChatRequest, PromptContext, PromptTag};

pub const ENRICH_ATTEMPTS: u32 = 3;

const ENRICH_TEMPLATE: &str = r#"Please enrich the initial persona information provided by the user, including name, age, gender, nationality, personality, and hobbies. Note that this information needs to be logically consistent with the initial persona information provided by the user, and age and nationality should not always be used the same. Meanwhile, detailed historical behavior information, preferences for social media content, and knowledge should be generated. It should be as detailed as possible to help users build a virtual social media user persona with more depth and personality.

Initial persona information provided by the user: {seed}

The output format is JSON format, where the keys are "name", "age", "gender", and "nationality", "personality", "hobbies", "detailed historical behaviour information", "preferences for social media content", "knowledge".
The following is an output example, please strictly follow the JSON format in the example for output.

{
"name": "John",
"age": 35,
"gender": "Male",
"nationality": "American",
"personality": "Adventurous, Outgoing",
"hobbies": "Working on vintage cars, Listening to country music, Taking care of dogs",
"detailed historical behaviour information": "John has always been passionate about cars, especially vintage cars. He has been collecting and restoring them for the past 10 years. His love for vintage cars led him to become knowledgeable about their mechanics and history. He has also participated in local car shows and won a few awards for his beautifully restored Mustangs. John's dogs are his loyal companions, and he spends quality time training and playing with them. He believes in responsible pet ownership and often volunteers at local animal shelters.",
"preferences for social media content": "John enjoys sharing his car restoration projects on social media platforms, where he documents the progress and showcases the before and after pictures of his vintage Mustangs. He also loves sharing his favorite country music playlists and recommendations. Additionally, he posts adorable pictures of his dogs, sometimes showcasing their tricks and training achievements.",
"knowledge": "John has extensive knowledge about vintage cars, particularly Ford Mustangs. He is familiar with various car models, their features, and the history of the Mustang brand. He keeps up with the latest trends in car restoration techniques and actively follows vintage car communities online. In terms of country music, John has a wide knowledge of classic and contemporary country artists, their discographies, and the stories behind their songs. He also has a good understanding of training techniques and dog behavior, thanks to his experience with his two dogs."
}"#;

pub fn enrichment_prompt(seed: &PersonaSeed) -> String {
    ENRICH_TEMPLATE.replace("{seed}", &seed.lines.join(" "))
}

/// Ask the backend for a full profile, retrying unparseable completions.
/// `agent` names the persona in seed keys.
pub fn enrich_persona(seed: &PersonaSeed, agent: &str, llm: &dyn ChatBackend) -> Result<PersonaProfile, PersonaError> {
    let prompt = enrichment_prompt(seed);
    let mut last_raw = String::new();
    for attempt in 0..ENRICH_ATTEMPTS {
        let request = ChatRequest::new(
            PromptTag::Enrich,
            prompt.clone(),
            ChatRequest::key(agent, 0, PromptTag::Enrich, attempt),
        )
        .with_context(PromptContext::Enrich {
            seed_lines: seed.lines.clone(),
        });
        let raw = llm.complete_text(&request)?;
        match parse_profile(&raw) {
            Ok(profile) => return Ok(profile),
            Err(e) => {
                tracing::warn!(agent, attempt, error = %e, "unparseable enrichment completion");
                last_raw = raw;
            }
        }
    }
    Err(PersonaError::Enrichment {
        attempts: ENRICH_ATTEMPTS,
        last_raw,
    })
}
