// Optional dictation via the browser's native speech recognizer. The UI
// stays text-first: recognized text only fills the input box and the user
// confirms before anything is sent.

type RecognitionCtor = new () => {
  lang: string;
  interimResults: boolean;
  maxAlternatives: number;
  onresult: ((event: { results: { [i: number]: { [j: number]: { transcript: string } } } }) => void) | null;
  onerror: ((event: unknown) => void) | null;
  onend: (() => void) | null;
  start: () => void;
  stop: () => void;
};

export function speechRecognitionCtor(scope: unknown = globalThis): RecognitionCtor | null {
  const w = scope as Record<string, unknown>;
  const ctor = w["SpeechRecognition"] ?? w["webkitSpeechRecognition"];
  return (ctor as RecognitionCtor) ?? null;
}

export function isDictationSupported(scope: unknown = globalThis): boolean {
  return speechRecognitionCtor(scope) !== null;
}

export interface DictationSession {
  stop: () => void;
}

/**
 * One-shot dictation: resolves with the recognized text, or null when the
 * recognizer ends without a result.
 */
export function dictateOnce(
  onText: (text: string | null) => void,
  scope: unknown = globalThis,
): DictationSession | null {
  const Ctor = speechRecognitionCtor(scope);
  if (!Ctor) return null;
  const rec = new Ctor();
  rec.lang = "en-US";
  rec.interimResults = false;
  rec.maxAlternatives = 1;
  let delivered = false;
  rec.onresult = (event) => {
    delivered = true;
    onText(event.results[0][0].transcript);
  };
  rec.onerror = () => {
    if (!delivered) {
      delivered = true;
      onText(null);
    }
  };
  rec.onend = () => {
    if (!delivered) {
      delivered = true;
      onText(null);
    }
  };
  rec.start();
  return { stop: () => rec.stop() };
}
