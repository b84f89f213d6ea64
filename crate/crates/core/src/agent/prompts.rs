//! Prompt templates sent to the chat backend.

const LIKE: &str = "Assume that you are the person described in [Persona information] and you are browsing social media. Please decide whether to like or take no action based on the content of the posts you see. When outputting, please strictly output one of \"like\" or \"no operation\" and do not output other content. The post content and persona information are as follows:

Post content: {post}

Persona information: {persona}";

const REBLOG: &str = "Assume that you are the person described in [Persona information] and you are browsing social media. Please decide whether to forward based on the content of the posts you see. When outputting, please strictly output one of \"forward\" or \"no operation\" and do not output other content. The post content and persona information are as follows:

Post content: {post}

Persona information: {persona}";

const COMMENT: &str = "Assume that you are the person described in [Persona information] and you are browsing social media. Please decide whether to comment based on the content of the posts you see. Note that users generally only comment on content that interests them or when they want to express their opinions. If you choose not to comment, directly output \"no comment\" and do not output other content. If you choose to comment, output the comment content directly, do not output other content, and start with \"Comment content:\". The post content and persona information are as follows:

Post content: {post}

Persona information: {persona}";

const TOPICS: &str = "Assume that you are the person described in [Persona information]. You usually browse social media and post regularly. Please generate {count} post topics suitable for posting on social media Twitter. The generated post topics need to be diverse and consistent with the persona information, be within 15 words in length, and do not include the topic symbol \"#\".

The output format is:

1. Theme one

2. Theme two

3. Theme three

The persona information is as follows: {persona}";

const POST_WITH_KNOWLEDGE: &str = "Assume you are the person described in [Persona information], and you usually browse social media and regularly post. Please generate a post suitable for posting on Twitter based on the provided topic. Directly output the generated post content, and do not insert images or videos. And you have some knowledge that this persona should have, which can be used as a reference, and the generated post can include some knowledge at the appropriate time. But the generated posts should not be a duplication of persona information or knowledge, and the post content should be about a single topic and be specific and rich. The length of the post must be limited to 500 characters. The post topic, persona information and the knowledge this persona possesses are as follows:

The post topic is: {topic}

Persona information (JSON format) is as follows: {persona}

The knowledge that the persona possesses is as follows: {knowledge}";

const POST: &str = "Assume you are the person described in [Persona information], and you usually browse social media and regularly post. Please generate a post suitable for posting on Twitter based on the provided topic. Directly output the generated post content, and do not insert images or videos. The generated posts should not be a duplication of persona information, and the post content should be about a single topic and be specific and rich. The length of the post must be limited to 500 characters. The post topic and persona information are as follows:

The post topic is: {topic}

Persona information (JSON format) is as follows: {persona}";

const REFLECT: &str = "Assume you are the person described in [Persona information], when you browse social media, you like, repost, and comment on multiple posts based on how much you like them. Please reflect and think based on your historical behavior and think about which user you want to follow. Please strictly enter the user ID you want to follow or \"do not follow\", no other content is required. Your persona information and historical behaviors are as follows:

Persona information: {persona}

The content of multiple posts and your operations are as follows: {history}";

const REFLECT_ENTRY: &str =
    "The {k}-th post was posted by user {uid}, and the content of the post is: {summary}. Your action on this post is: {action}.";

const SUMMARY: &str = "The following is a post from social media, please generate a concise summary of no more than 50 words. The content of the post is as follows: {post}";

pub fn like(post: &str, persona: &str) -> String {
    LIKE.replace("{post}", post).replace("{persona}", persona)
}

pub fn reblog(post: &str, persona: &str) -> String {
    REBLOG.replace("{post}", post).replace("{persona}", persona)
}

pub fn comment(post: &str, persona: &str) -> String {
    COMMENT.replace("{post}", post).replace("{persona}", persona)
}

pub fn topics(count: usize, persona_json: &str) -> String {
    TOPICS
        .replace("{count}", &count.to_string())
        .replace("{persona}", persona_json)
}

/// Knowledge-grounded template when `knowledge` is nonempty, plain otherwise.
pub fn post(topic: &str, persona_json: &str, knowledge: &[String]) -> String {
    if knowledge.is_empty() {
        POST.replace("{topic}", topic).replace("{persona}", persona_json)
    } else {
        POST_WITH_KNOWLEDGE
            .replace("{topic}", topic)
            .replace("{persona}", persona_json)
            .replace("{knowledge}", &knowledge.join("\n"))
    }
}

pub fn reflect_entry(k: usize, uid: &str, summary: &str, action: &str) -> String {
    REFLECT_ENTRY
        .replace("{k}", &k.to_string())
        .replace("{uid}", uid)
        .replace("{summary}", summary.trim_end_matches('.'))
        .replace("{action}", action)
}

pub fn reflect(persona: &str, history: &str) -> String {
    REFLECT.replace("{persona}", persona).replace("{history}", history)
}

pub fn summary(post: &str) -> String {
    SUMMARY.replace("{post}", post)
}
